import os
import unittest
from gbaxis.configparse import ConfigError, parse_config_text
from gbaxis.core import Configuration, RunConfig, DEFAULT_CONFIG_PATH
from gbaxis.model import ModelError
from gbaxis.integrator import IntegrationError


class ConfigTestCase(unittest.TestCase):
    maxDiff = None
    CURRENT_DIR: str = os.path.dirname(__file__)
    SOURCE_ROOT: str = os.path.join(CURRENT_DIR, "source")

    def source(self, name: str) -> str:
        return os.path.join(ConfigTestCase.SOURCE_ROOT, name)

    def test_parse_text(self):
        sections = parse_config_text("# c\n[a]\nx = 1, 2 ; note\n\n[b]\n  y=rk4-hermite\n")
        self.assertEqual({"a": {"x": "1, 2"}, "b": {"y": "rk4-hermite"}}, sections)

    def test_parse_errors(self):
        with self.assertRaises(ConfigError):
            parse_config_text("x = 1\n")
        with self.assertRaises(ConfigError):
            parse_config_text("[a]\nx = 1\nx = 2\n")
        with self.assertRaises(ConfigError) as ctx:
            Configuration.load(self.source("bad_syntax.cfg"))
        self.assertEqual(1, ctx.exception.line)

    def test_default_file_matches_code(self):
        self.assertEqual(RunConfig(), Configuration.load(DEFAULT_CONFIG_PATH))

    def test_overrides(self):
        config = Configuration.load(self.source("minimal.cfg"))
        self.assertEqual(0.004, config.parameters().k_damage)
        self.assertEqual(7.66, config.parameters().h)
        self.assertEqual(2880.0, config.integrator().horizon)
        self.assertEqual(["json"], config["output"]["formats"])
        self.assertEqual(config, Configuration.load(self.source("minimal.json")))

    def test_unknown_key(self):
        with self.assertRaises(ConfigError) as ctx:
            Configuration.load(self.source("unknown_key.cfg"))
        self.assertIn("k_leak", ctx.exception.message)

    def test_domain_validation(self):
        with self.assertRaises(ModelError):
            RunConfig({"parameters": {"eA": "-1"}})
        with self.assertRaises(ConfigError):
            RunConfig({"parameters": {"m1": "2.5"}})
        with self.assertRaises(IntegrationError):
            RunConfig({"integrator": {"step": "5"}})
        with self.assertRaises(ConfigError):
            RunConfig({"analysis": {"points": "many"}})

    def test_text_round_trip(self):
        config = RunConfig({"circadian": {"amplitude": 0.25}, "analysis": {"noise_sweep": [1e-6, 1e-5]}})
        self.assertEqual(config, RunConfig(parse_config_text(config.to_text())))

    def test_copy_is_independent(self):
        config = RunConfig()
        other = config.copy()
        other.update({"scenario": {"elevated": 2.0}})
        self.assertEqual(3.0, config.scenario().elevated)


if __name__ == '__main__':
    unittest.main()
