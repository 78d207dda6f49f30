"""
Configuration for the virtual structure constant engine
Environment variables, optional .env file and default limits
"""
import os
from typing import Optional

from dotenv import load_dotenv

load_dotenv()

# Try to use pydantic-settings if available, otherwise fall back to simple os.getenv
try:
    from pydantic_settings import BaseSettings
    USE_PYDANTIC = True
except ImportError:
    USE_PYDANTIC = False


class Settings(BaseSettings if USE_PYDANTIC else object):
    """Engine settings with environment variable support"""

    # Application
    APP_NAME: str = os.getenv("APP_NAME", "Hypersurface Structure Constants")
    DEBUG: bool = os.getenv("DEBUG", "False").lower() == "true"
    LOG_LEVEL: str = os.getenv("LOG_LEVEL", "WARNING")

    # Degrees
    DEFAULT_D_MAX: int = int(os.getenv("DEFAULT_D_MAX", "5"))
    MAX_VALIDATED_DEGREE: int = int(os.getenv("MAX_VALIDATED_DEGREE", "5"))

    # Correlator cache
    CACHE_DIR: str = os.getenv("CACHE_DIR", ".vgw_cache")
    CACHE_PATH: Optional[str] = os.getenv("CACHE_PATH")

    # Results database
    RESULTS_DATABASE_URL: Optional[str] = os.getenv("RESULTS_DATABASE_URL")
    # Fallback to SQLite when no URL is given
    USE_SQLITE: bool = os.getenv("USE_SQLITE", "True").lower() == "true"
    SQLITE_PATH: str = os.getenv("SQLITE_PATH", "structure_constants.db")

    if USE_PYDANTIC:
        class Config:
            env_file = ".env"
            case_sensitive = True


# Global settings instance
settings = Settings()
