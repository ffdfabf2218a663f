from fastapi import APIRouter, Depends
from sqlalchemy.orm import Session

from app.commands import crowds_command, preset_catalog, save_report
from app.config import resolve_mode
from app.database import get_db
from app.markov.errors import MarkovError
from app.routers.errors import http_error
from app.schemas import CrowdsRequest, RunReport

router = APIRouter(prefix="/crowds", tags=["crowds"])


@router.get("/presets")
def get_presets():
    return preset_catalog()["crowds"]


@router.post("/", response_model=RunReport)
def run_crowds(request: CrowdsRequest, save: bool = False, db: Session = Depends(get_db)):
    try:
        report = crowds_command(
            resolve_mode(request.mode),
            samples=request.samples,
            seed=request.seed,
            preset=request.preset,
            jondos=request.jondos,
            colls=request.colls,
            pf=request.pf,
            init=request.init,
        )
    except MarkovError as exc:
        raise http_error(exc)
    if save:
        save_report(db, report)
    return report
