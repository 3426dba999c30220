import os
import sys
import time
import json
import copy
import logging
import concurrent.futures
from typing import Any, Callable, Dict, List, Sequence
from gbaxis.model import ModelParameters, CircadianDrive, RESTING_STATE
from gbaxis.integrator import IntegratorConfig
from gbaxis.scenarios import ScenarioConfig
from gbaxis.configparse import ConfigError, parse_config_text


OUTPUT_DIR_ENV = "GBAXIS_OUTPUT_DIR"
DEFAULT_CONFIG_PATH = os.path.join(os.path.dirname(__file__), "default.cfg")


def _default_sections() -> Dict[str, Dict[str, Any]]:
    return {
        "parameters": ModelParameters().to_json(),
        "circadian": CircadianDrive().to_json(),
        "integrator": {
            "step": 0.5,
            "horizon": 14400.0,
            "output_spacing": 1.0,
            "method": "rk4-hermite",
            "clamp_tolerance": 1e-12,
        },
        "scenario": {
            "baseline": 0.1,
            "elevated": 3.0,
            "t_on": 2880.0,
            "pulse_duration": 720.0,
            "initial_state": list(RESTING_STATE),
            "analysis_start": 4320.0,
            "final_window": 4320.0,
            "recovery_tolerance": 0.05,
        },
        "analysis": {
            "u_healthy": 0.1,
            "u_chronic": 3.0,
            "f_min": 1e-6,
            "f_max": 1.0,
            "points": 400,
            "noise_level": 1e-4,
            "power": 1e-2,
            "noise_sweep": [1e-5, 3e-5, 1e-4, 3e-4, 1e-3],
            "power_sweep": [1e-3, 3e-3, 1e-2, 3e-2, 1e-1],
            "kleak_grid": [round(0.1 * i, 10) for i in range(31)],
            "healthy_fraction": 0.5,
            "disrupted_fraction": 0.01,
            "threshold_resolution": 0.01,
        },
        "output": {
            "directory": "gbaxis-output",
            "formats": ["csv", "json"],
            "plots": False,
        },
    }


def _coerce(section: str, key: str, raw: Any, default: Any) -> Any:
    where = "[" + section + "] " + key
    try:
        if isinstance(default, bool):
            if isinstance(raw, bool):
                return raw
            if str(raw).lower() in ("true", "yes", "on", "1"):
                return True
            if str(raw).lower() in ("false", "no", "off", "0"):
                return False
            raise ValueError(raw)
        if isinstance(default, int):
            value = float(raw)
            if value != int(value):
                raise ValueError(raw)
            return int(value)
        if isinstance(default, float):
            return float(raw)
        if isinstance(default, list):
            items = raw if isinstance(raw, list) else [s.strip() for s in str(raw).split(",") if s.strip()]
            if default and isinstance(default[0], str):
                return [str(s) for s in items]
            return [float(s) for s in items]
        return str(raw)
    except (TypeError, ValueError):
        raise ConfigError("invalid value for " + where + ": " + repr(raw))


def _format(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, list):
        return ", ".join(_format(v) for v in value)
    return str(value)


class RunConfig:
    """Fully resolved run configuration, one dict per section."""
    SECTIONS = ("parameters", "circadian", "integrator", "scenario", "analysis", "output")

    def __init__(self, sections: Dict[str, Dict[str, Any]] = None):
        self.sections = _default_sections()
        if sections:
            self.update(sections)

    def update(self, sections: Dict[str, Dict[str, Any]]):
        for section, entries in sections.items():
            if section not in self.sections:
                raise ConfigError("unknown section [" + section + "]")
            if not isinstance(entries, dict):
                raise ConfigError("section [" + section + "] must hold key/value entries")
            for key, raw in entries.items():
                if key not in self.sections[section]:
                    raise ConfigError("unknown key " + repr(key) + " in [" + section + "]")
                self.sections[section][key] = _coerce(section, key, raw, self.sections[section][key])
        # surface domain-level errors while loading
        self.parameters()
        self.drive()
        self.integrator().validate((self.parameters().tau_hpa, self.parameters().tau_gut))
        return self

    def __getitem__(self, section: str) -> Dict[str, Any]:
        return self.sections[section]

    def __eq__(self, other):
        return isinstance(other, RunConfig) and self.sections == other.sections

    def parameters(self) -> ModelParameters:
        return ModelParameters(**self.sections["parameters"])

    def drive(self) -> CircadianDrive:
        return CircadianDrive(**self.sections["circadian"])

    def integrator(self) -> IntegratorConfig:
        return IntegratorConfig(**self.sections["integrator"])

    def scenario(self) -> ScenarioConfig:
        return ScenarioConfig(**self.sections["scenario"])

    def copy(self) -> 'RunConfig':
        other = RunConfig()
        other.sections = copy.deepcopy(self.sections)
        return other

    def to_text(self) -> str:
        lines = ["# gbaxis run configuration"]
        for section in self.SECTIONS:
            lines.append("")
            lines.append("[" + section + "]")
            for key, value in self.sections[section].items():
                lines.append(key + " = " + _format(value))
        return "\n".join(lines) + "\n"

    def to_json(self):
        return self.sections


class Configuration:
    @staticmethod
    def load(file_path: str) -> RunConfig:
        with open(file_path) as config_file:
            text = config_file.read()
        if file_path.endswith(".json"):
            try:
                data = json.loads(text)
            except ValueError as exc:
                raise ConfigError("invalid JSON config " + file_path + ": " + str(exc))
            if not isinstance(data, dict):
                raise ConfigError("a JSON config must be an object of sections")
            return RunConfig(data)
        return RunConfig(parse_config_text(text))

    @staticmethod
    def load_default() -> RunConfig:
        return Configuration.load(DEFAULT_CONFIG_PATH)

    @staticmethod
    def generate_default(file_path: str):
        with open(file_path, 'w') as config_file:
            config_file.write(RunConfig().to_text())
        print('Config. file generated in: ' + os.path.abspath(file_path))


def _run_inline(fn, tasks, label):
    results = []
    for i, task in enumerate(tasks):
        results.append(fn(task))
        logging.info('[' + str(i + 1) + '/' + str(len(tasks)) + '] ' + label + '(s) processed')
    return results


class ParallelRunner:
    """Maps a picklable function over independent tasks; results keep task order."""

    def __init__(self, jobs: int = 1):
        self._jobs = max(1, int(jobs))

    def map(self, fn: Callable[[Any], Any], tasks: Sequence[Any], label: str = "task") -> List[Any]:
        tasks = list(tasks)
        logging.info(str(len(tasks)) + ' ' + label + '(s) to process')
        start = time.time()
        if self._jobs == 1 or len(tasks) <= 1:
            results = _run_inline(fn, tasks, label)
        else:
            results = [None] * len(tasks)
            processed = 0
            with concurrent.futures.ProcessPoolExecutor(max_workers=self._jobs) as executor:
                future_to_index = {executor.submit(fn, task): i for i, task in enumerate(tasks)}
                for future in concurrent.futures.as_completed(future_to_index):
                    index = future_to_index[future]
                    try:
                        results[index] = future.result()
                    except Exception as exc:
                        logging.error('%s %d generated an exception: %s' % (label, index, exc))
                        raise
                    processed += 1
                    logging.info('[' + str(processed) + '/' + str(len(tasks)) + '] ' + label + '(s) processed')
                    sys.stderr.flush()
        end = time.time()
        logging.info(str(len(tasks)) + ' ' + label + '(s) processed in ' + str(round(end - start, 2)) + ' s')
        return results
