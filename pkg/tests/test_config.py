"""Configuration file parsing, defaults, and echo round-trips."""

import pytest

from eqspike.config import ConfigError, load_config, parse_config, resolved_toml
from eqspike.params import HyperParams
from eqspike.trainer import TrainerConfig


FULL = """
[network]
layer_sizes = [784, 50, 10]

[hyper]
gamma_lif = 0.06
gamma_li = 0.02
u_th = 0.9
beta = 1.5
tau = 10
n_filt = 25
t_free = 350
t_nudge = 150
t_refract = 1
dt = 2.0
learning_rate = 2e-3

[training]
epochs = 4
seed = 9
shuffle = false
target_rate_hi = 0.7
target_rate_lo = 0.05
skip_threshold = 0.02
eval_steps = 120
eval_window = 80
nudge_with_instantaneous_rates = false
learn_biases = false

[data]
train_n = 500
test_n = 100
subset_seed = 3
"""


class TestParsing:
    def test_empty_config_gives_defaults(self):
        cfg = parse_config("")
        assert cfg.trainer.hyper == HyperParams()
        assert cfg.trainer.layer_sizes == TrainerConfig.layer_sizes
        assert cfg.train_n is None

    def test_every_field_settable(self):
        cfg = parse_config(FULL)
        h = cfg.trainer.hyper
        assert h.gamma_lif == 0.06 and h.gamma_li == 0.02
        assert h.u_th == 0.9 and h.beta == 1.5
        assert h.tau == 10 and h.n_filt == 25
        assert h.t_free == 350 and h.t_nudge == 150
        assert h.t_refract == 1 and h.dt == 2.0
        assert h.learning_rate == pytest.approx(2e-3)
        t = cfg.trainer
        assert t.layer_sizes == (784, 50, 10)
        assert t.epochs == 4 and t.seed == 9 and t.shuffle is False
        assert t.target_rate_hi == 0.7 and t.target_rate_lo == 0.05
        assert t.skip_threshold == 0.02
        assert t.eval_steps == 120 and t.eval_window == 80
        assert t.nudge_with_instantaneous_rates is False
        assert t.learn_biases is False
        assert (cfg.train_n, cfg.test_n, cfg.subset_seed) == (500, 100, 3)

    def test_learning_rate_sets_eta_r(self):
        cfg = parse_config("[hyper]\nlearning_rate = 3e-3\ntau = 10\ngamma_li = 0.05\n")
        h = cfg.trainer.hyper
        assert h.eta_r == pytest.approx(3e-3 * 0.05 / 10)
        assert h.learning_rate == pytest.approx(3e-3)

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError, match="unknown key"):
            parse_config("[hyper]\ngamma = 0.1\n")
        with pytest.raises(ConfigError, match="unknown key"):
            parse_config("[extras]\nx = 1\n")

    def test_conflicting_rate_settings_rejected(self):
        with pytest.raises(ConfigError, match="not both"):
            parse_config("[hyper]\nlearning_rate = 1e-3\neta_r = 1e-6\n")

    def test_invalid_values_surface_as_config_errors(self):
        with pytest.raises(ConfigError):
            parse_config("[hyper]\ngamma_lif = 1.5\n")
        with pytest.raises(ConfigError):
            parse_config("[training]\ntarget_rate_hi = 0.9\n"
                         "[hyper]\nt_refract = 2\n")

    def test_toml_syntax_error(self):
        with pytest.raises(ConfigError, match="TOML"):
            parse_config("[hyper\ngamma_lif = 0.05")

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_config(tmp_path / "none.toml")


class TestResolvedEcho:
    def test_echo_parses_back_to_same_configuration(self):
        cfg = parse_config(FULL)
        echoed = resolved_toml(cfg)
        cfg2 = parse_config(echoed)
        assert cfg2.trainer.hyper == cfg.trainer.hyper
        assert cfg2.trainer.layer_sizes == cfg.trainer.layer_sizes
        assert cfg2.trainer.epochs == cfg.trainer.epochs
        assert cfg2.trainer.rate_hi == cfg.trainer.rate_hi
        assert cfg2.train_n == cfg.train_n

    def test_echo_contains_defaults_for_unset_fields(self):
        echoed = resolved_toml(parse_config(""))
        assert "gamma_lif = 0.05" in echoed
        assert "epochs = 10" in echoed
        assert "target_rate_hi" in echoed

    def test_echo_is_deterministic(self):
        assert resolved_toml(parse_config(FULL)) == resolved_toml(parse_config(FULL))
