import os
from dataclasses import dataclass

@dataclass(frozen=True)
class Settings:
    app_env = os.getenv("APP_ENV", "prod")
    log_level = os.getenv("LOG_LEVEL", "INFO").upper()

    database_url = os.getenv("DATABASE_URL", "sqlite:///./resamplelab.db")

    # Internal docker-to-docker MinIO endpoint
    minio_endpoint = os.getenv("MINIO_ENDPOINT", "").rstrip("/")

    # Public endpoint used in presigned URLs (browser must be able to reach this)
    minio_public_endpoint = os.getenv("MINIO_PUBLIC_ENDPOINT", "").rstrip("/")

    minio_access_key = os.getenv("MINIO_ACCESS_KEY", "")
    minio_secret_key = os.getenv("MINIO_SECRET_KEY", "")
    minio_bucket = os.getenv("MINIO_BUCKET", "resamplelab")

    default_seed = int(os.getenv("DEFAULT_SEED", "0"))
    nn_threshold = int(os.getenv("NN_THRESHOLD", "30"))
    max_upload_rows = int(os.getenv("MAX_UPLOAD_ROWS", "20000"))

settings = Settings()
