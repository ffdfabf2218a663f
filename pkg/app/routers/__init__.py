from fastapi import APIRouter
from app.routers.chains import router as chains_router
from app.routers.zeroconf import router as zeroconf_router
from app.routers.crowds import router as crowds_router
from app.routers.simulate import router as simulate_router
from app.routers.runs import router as runs_router

api_router = APIRouter(prefix="/api")

api_router.include_router(chains_router)
api_router.include_router(zeroconf_router)
api_router.include_router(crowds_router)
api_router.include_router(simulate_router)
api_router.include_router(runs_router)
