from fastapi import APIRouter, Depends
from sqlalchemy.orm import Session

from app.commands import preset_catalog, save_report, zeroconf_command
from app.config import resolve_mode
from app.database import get_db
from app.markov.errors import MarkovError
from app.routers.errors import http_error
from app.schemas import RunReport, ZeroconfRequest

router = APIRouter(prefix="/zeroconf", tags=["zeroconf"])


@router.get("/presets")
def get_presets():
    return preset_catalog()["zeroconf"]


@router.post("/", response_model=RunReport)
def run_zeroconf(request: ZeroconfRequest, save: bool = False, db: Session = Depends(get_db)):
    try:
        report = zeroconf_command(
            resolve_mode(request.mode),
            samples=request.samples,
            seed=request.seed,
            preset=request.preset,
            probes=request.probes,
            p=request.p,
            q=request.q,
            hosts=request.hosts,
            r=request.r,
            E=request.E,
        )
    except MarkovError as exc:
        raise http_error(exc)
    if save:
        save_report(db, report)
    return report
