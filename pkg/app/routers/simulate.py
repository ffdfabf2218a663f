from fastapi import APIRouter, Depends
from sqlalchemy.orm import Session

from app.commands import save_report, simulate_command
from app.config import resolve_mode
from app.database import get_db
from app.markov.errors import MarkovError
from app.routers.errors import http_error
from app.schemas import RunReport, SimulateRequest

router = APIRouter(prefix="/simulate", tags=["simulate"])


@router.post("/", response_model=RunReport)
def run_simulation(request: SimulateRequest, save: bool = False, db: Session = Depends(get_db)):
    try:
        report = simulate_command(
            request.event,
            resolve_mode(request.mode),
            model=request.model,
            preset=request.preset,
            start=request.start,
            seed=request.seed,
            samples=request.samples,
            max_steps=request.max_steps,
        )
    except MarkovError as exc:
        raise http_error(exc)
    if save:
        save_report(db, report)
    return report
