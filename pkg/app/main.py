import logging

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware

from app import config
from app.database import Base, engine
from app.routers import api_router

logging.basicConfig(level=getattr(logging, config.LOG_LEVEL, logging.WARNING))

Base.metadata.create_all(bind=engine)

app = FastAPI(title="Markov chain analysis")


app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

app.include_router(api_router)
