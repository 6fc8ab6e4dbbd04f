from functools import lru_cache

from pydantic import computed_field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    model_config = SettingsConfigDict(env_prefix="EBD_", env_file=".env", env_file_encoding="utf-8")

    mu: float = 0.6
    eta: float = 25.0
    delta: float = 5.0
    ratio: float = 2.0
    p: float = 0.001
    eps_final: float = 1.0
    eps_factor: float = 0.5
    inner_tol: float = 1e-6
    inner_max_iterations: int = 50
    tol: float = 1e-8
    max_iter: int = 200
    seed: int = 0
    jobs: int = 1
    ransac_iterations: int = 2000
    ransac_threshold: float = 1.0
    eval_step: float = 2.0
    eval_thresholds: str = "0.25,0.5,1,2,3,4,5,7.5,10,15,20"
    smoothness: float = 1.0
    estimate_f: bool = False
    baselines: str = "0.25,0.5,0.75,1,1.25"
    log_level: str = "INFO"

    @computed_field
    @property
    def thresholds(self) -> list[float]:
        return [float(t) for t in self.eval_thresholds.split(",") if t.strip()]

    @computed_field
    @property
    def baseline_factors(self) -> list[float]:
        return [float(t) for t in self.baselines.split(",") if t.strip()]


@lru_cache
def get_settings() -> Settings:
    return Settings()
