from sqlalchemy import Column, Integer, String, Text, DateTime, func
from app.database import Base


# Saved run reports
class RunRecord(Base):
    __tablename__ = "runs"

    run_id = Column(Integer, primary_key=True, index=True, autoincrement=True)
    command = Column(String(50), nullable=False, index=True)
    mode = Column(String(10), nullable=False)
    report_json = Column(Text, nullable=False)
    created_at = Column(DateTime(timezone=True), server_default=func.now())
