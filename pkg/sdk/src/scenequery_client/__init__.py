"""Client SDK for the scenequery evaluation server."""

from .client import (
    ClientError,
    ProtocolOrderError,
    QueryItem,
    RemoteSession,
    ServerError,
    bool_answer,
    interval_answer,
    label_answer,
    open_session,
    polygon_answer,
    unable_answer,
)
from .qxml import QueryParseError, parse_query

__version__ = "0.1.0"

__all__ = [
    "ClientError",
    "ProtocolOrderError",
    "QueryItem",
    "QueryParseError",
    "RemoteSession",
    "ServerError",
    "bool_answer",
    "interval_answer",
    "label_answer",
    "open_session",
    "parse_query",
    "polygon_answer",
    "unable_answer",
    "__version__",
]
