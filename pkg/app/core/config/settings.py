from pydantic_settings import BaseSettings
import os
from dotenv import load_dotenv

load_dotenv()

class Settings(BaseSettings):
    # 应用配置
    APP_ENV: str = os.getenv("APP_ENV", "development")
    DEBUG: bool = os.getenv("DEBUG", "False").lower() == "true"
    LOG_LEVEL: str = os.getenv("LOG_LEVEL", "INFO")
    API_PREFIX: str = os.getenv("API_PREFIX", "/api/v1")
    PORT: int = int(os.getenv("PORT", "8000"))

    # Signing tool / loader defaults
    DEFAULT_LOADER: str = os.getenv("DEFAULT_LOADER", "modified")
    DEFAULT_VARIANT: str = os.getenv("DEFAULT_VARIANT", "basic")
    DEFAULT_MARS_PAGES: int = int(os.getenv("DEFAULT_MARS_PAGES", "1"))

    # Migration protocol
    KEY_EXCHANGE: str = os.getenv("KEY_EXCHANGE", "ecdh")
    PROTOCOL_STEP_BUDGET: int = int(os.getenv("PROTOCOL_STEP_BUDGET", "8"))
    SECRET_SIZE: int = int(os.getenv("SECRET_SIZE", "1024"))

    # Benchmarks and fixtures
    BENCH_REPEATS: int = int(os.getenv("BENCH_REPEATS", "5"))
    FIXTURE_SEED: int = int(os.getenv("FIXTURE_SEED", "2020"))

    class Config:
        case_sensitive = True

settings = Settings()
