from .settings import Settings, settings
from .scenario import ScenarioConfig, load_scenario, parse_scenario_text

__all__ = ['Settings', 'settings', 'ScenarioConfig', 'load_scenario', 'parse_scenario_text']
