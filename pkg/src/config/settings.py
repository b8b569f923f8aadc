import os
from typing import Optional
from pydantic import BaseModel, Field
from dotenv import load_dotenv

# Load environment variables
load_dotenv()

class IntegratorSection(BaseModel):
    rel_tol: float = 1e-10  # verification runs
    abs_tol: float = 1e-12
    opt_rel_tol: float = 1e-6  # optimizer inner loop
    opt_abs_tol: float = 1e-8
    max_steps: int = 200_000
    newton_max_iters: int = 7

class OptimizerSection(BaseModel):
    seed: int = 0
    budget: int = 20_000
    bound: float = 20.0
    spline_points: int = 5
    horizon_min: float = 0.1
    horizon_max: float = 10.0
    population_size: Optional[int] = None  # None = 2 * dimension, at least 20

class Settings(BaseModel):
    integrator: IntegratorSection = Field(default_factory=IntegratorSection)
    optimizer: OptimizerSection = Field(default_factory=OptimizerSection)

    # Paths
    log_level: str = "INFO"
    log_file: str = "./logs/dnlse.log"
    output_dir: str = "./output"

    @classmethod
    def load(cls) -> 'Settings':
        """Load settings from environment variables"""
        settings = cls()

        settings.integrator.rel_tol = float(os.getenv('DNLSE_REL_TOL', settings.integrator.rel_tol))
        settings.integrator.abs_tol = float(os.getenv('DNLSE_ABS_TOL', settings.integrator.abs_tol))
        settings.integrator.opt_rel_tol = float(os.getenv('DNLSE_OPT_REL_TOL', settings.integrator.opt_rel_tol))
        settings.integrator.opt_abs_tol = float(os.getenv('DNLSE_OPT_ABS_TOL', settings.integrator.opt_abs_tol))
        settings.integrator.max_steps = int(os.getenv('DNLSE_MAX_STEPS', settings.integrator.max_steps))
        settings.integrator.newton_max_iters = int(os.getenv('DNLSE_NEWTON_MAX_ITERS', settings.integrator.newton_max_iters))

        settings.optimizer.seed = int(os.getenv('DNLSE_SEED', settings.optimizer.seed))
        settings.optimizer.budget = int(os.getenv('DNLSE_BUDGET', settings.optimizer.budget))
        settings.optimizer.bound = float(os.getenv('DNLSE_BOUND', settings.optimizer.bound))
        settings.optimizer.spline_points = int(os.getenv('DNLSE_SPLINE_POINTS', settings.optimizer.spline_points))
        settings.optimizer.horizon_min = float(os.getenv('DNLSE_HORIZON_MIN', settings.optimizer.horizon_min))
        settings.optimizer.horizon_max = float(os.getenv('DNLSE_HORIZON_MAX', settings.optimizer.horizon_max))

        pop = os.getenv('DNLSE_POPULATION', 'x')
        settings.optimizer.population_size = None if pop.lower() == 'x' else int(pop)

        settings.log_level = os.getenv('LOG_LEVEL', settings.log_level)
        settings.log_file = os.getenv('LOG_FILE', settings.log_file)
        settings.output_dir = os.getenv('DNLSE_OUTPUT_DIR', settings.output_dir)

        return settings

# Global settings instance
settings = Settings.load()
