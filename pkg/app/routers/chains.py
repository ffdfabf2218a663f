from fastapi import APIRouter, Depends, HTTPException
from sqlalchemy.orm import Session
from typing import Literal, Optional

from app.commands import save_report, solve_command, validate_command
from app.config import resolve_mode
from app.database import get_db
from app.markov.errors import MarkovError
from app.routers.errors import http_error
from app.schemas import ModelFile, RunReport, SolveRequest

router = APIRouter(prefix="/chains", tags=["chains"])


@router.post("/validate", response_model=RunReport)
def validate_chain(
    model: ModelFile,
    mode: Optional[Literal["exact", "float"]] = None,
    save: bool = False,
    db: Session = Depends(get_db),
):
    """
    Validate a model. Semantic failures answer 422 with the error and the
    report (raw row sums of the offending states) in `detail`.
    """
    try:
        report, error = validate_command(model, resolve_mode(mode))
    except MarkovError as exc:
        raise http_error(exc)
    if save:
        save_report(db, report)
    if error is not None:
        raise HTTPException(status_code=error.status_code, detail={**error.to_dict(), "report": report.model_dump()})
    return report


@router.post("/solve", response_model=RunReport)
def solve_chain(request: SolveRequest, save: bool = False, db: Session = Depends(get_db)):
    try:
        report = solve_command(
            request.model,
            request.until,
            request.start,
            resolve_mode(request.mode),
            cost=request.cost,
            hitting=request.hitting,
        )
    except MarkovError as exc:
        raise http_error(exc)
    if save:
        save_report(db, report)
    return report
