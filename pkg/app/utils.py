import functools
import json
import logging
import os
from decimal import ROUND_DOWN, Decimal
from typing import Any, Callable, Iterable

import redis
from dotenv import load_dotenv

load_dotenv()

logger = logging.getLogger(__name__)

DEFAULT_WORKERS = int(os.getenv("SWEEP_WORKERS", "1"))
REGISTER_LOW_HZ = float(os.getenv("REGISTER_LOW_HZ", "100"))
REGISTER_HIGH_HZ = float(os.getenv("REGISTER_HIGH_HZ", "300"))
CACHE_SECONDS = int(os.getenv("CACHE_SECONDS", "300"))

# Initialize Redis client (optional)
redis_client = None
redis_url = os.getenv("REDIS_URL")
if redis_url:
    try:
        redis_client = redis.from_url(redis_url)
        redis_client.ping()
        logger.info("Redis connected successfully")
    except Exception as e:
        logger.warning("Redis connection failed: %s. Continuing without caching.", e)
        redis_client = None


def cache_response(expiry_seconds: int = CACHE_SECONDS) -> Callable:
    """Cache results of a pure function in redis; pydantic results are stored as JSON-mode dicts."""
    def decorator(func):
        @functools.wraps(func)
        def wrapper(*args, **kwargs):
            if not redis_client:
                return func(*args, **kwargs)

            cache_key = f"{func.__name__}:{json.dumps([args, kwargs], sort_keys=True, default=str)}"

            cached_result = redis_client.get(cache_key)
            if cached_result:
                return json.loads(cached_result)

            result = to_jsonable(func(*args, **kwargs))
            redis_client.setex(cache_key, expiry_seconds, json.dumps(result))
            return result
        return wrapper
    return decorator


def format_number(value: float) -> str:
    """Shortest exact text for a number; integral floats print without a fraction."""
    value = float(value)
    if value.is_integer():
        return str(int(value))
    return repr(value)


def truncate3(value: float) -> str:
    """Three decimals, truncated toward zero."""
    return str(Decimal(repr(float(value))).quantize(Decimal("0.001"), rounding=ROUND_DOWN))


def format_pattern(values: Iterable[float]) -> str:
    return " ".join(format_number(v) for v in values)


def to_jsonable(result: Any) -> Any:
    if hasattr(result, "model_dump"):
        return result.model_dump(mode="json")
    return result
