from fastapi import APIRouter, Depends, HTTPException
from sqlalchemy.orm import Session
from typing import List, Optional

from app.commands import get_run, list_runs, record_out
from app.database import get_db
from app.schemas import RunRecordOut

router = APIRouter(prefix="/runs", tags=["runs"])


@router.get("/", response_model=List[RunRecordOut])
def get_runs(command: Optional[str] = None, limit: int = 50, db: Session = Depends(get_db)):
    return [record_out(record) for record in list_runs(db, command, limit)]


@router.get("/{run_id}", response_model=RunRecordOut)
def get_run_by_id(run_id: int, db: Session = Depends(get_db)):
    record = get_run(db, run_id)
    if not record:
        raise HTTPException(status_code=404, detail="Run not found")
    return record_out(record)
