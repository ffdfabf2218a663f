from fastapi import HTTPException

from app.markov.errors import MarkovError


def http_error(exc: MarkovError) -> HTTPException:
    return HTTPException(status_code=exc.status_code, detail=exc.to_dict())
