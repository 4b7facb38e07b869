import sys
from pathlib import Path

from pydantic import BaseModel, ValidationError
from pydantic_settings import BaseSettings, SettingsConfigDict

from core.errors import ConfigError, InputFileError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


class Settings(BaseSettings):
    RGC_ATTN_SEED: int | None = None
    RGC_ATTN_LOG_LEVEL: str = "INFO"
    RGC_ATTN_OUT_DIR: str = "runs"
    RGC_ATTN_THREADS: int = 1

    model_config = SettingsConfigDict(
        env_file=".env",
        case_sensitive=True,
        extra="allow"
    )


settings = Settings()


def read_toml(path: str | Path) -> dict:
    path = Path(path)
    try:
        with path.open("rb") as f:
            return tomllib.load(f)
    except FileNotFoundError:
        raise InputFileError(path, "config file not found")
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"{path}: {e}")


def load_config(model_cls: type[BaseModel], path: str | Path | None = None, section: str | None = None, **overrides):
    """Validate a TOML file (or one of its tables) into `model_cls`.

    Keyword overrides that are not None win over the file; the env seed
    (RGC_ATTN_SEED) sits between the two for any model with a `seed` field.
    """
    data = read_toml(path) if path is not None else {}
    if section is not None:
        data = data.get(section, {})
    if settings.RGC_ATTN_SEED is not None and "seed" in model_cls.model_fields:
        data["seed"] = settings.RGC_ATTN_SEED
    data.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return model_cls.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"{model_cls.__name__}: {e}")
