from typing import Optional

from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    # Service Configuration
    service_name: str = "bianchi-noether"
    environment: str = "production"
    log_level: str = "INFO"

    # Numeric harness
    default_step: float = 1e-3
    default_smax: float = 1.0
    drift_tolerance: float = 1e-7

    # Symbolic engine
    max_derivative_order: int = 6

    # Batch execution
    max_workers: int = 1

    # Reserved for the randomized test suite
    seed: Optional[int] = None

    model_config = {
        "env_file": ".env",
        "env_prefix": "BIANCHI_NOETHER_",
        "case_sensitive": False,
        "extra": "ignore",
    }


settings = Settings()
