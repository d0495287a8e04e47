from pathlib import Path

import pytest

import blade_rec
from blade_rec.config import (ExperimentConfig, import_config, parse_value,
                              parse_config_text)
from blade_rec.metrics import RewardSpec

CONFIG_DIR = Path(blade_rec.__file__).parent / "configs"


def test_defaults():
    cfg = ExperimentConfig()
    assert (cfg.group_size, cfg.ref_size, cfg.tau, cfg.bon_n) == \
        (16, 128, 0.3, 4)
    assert (cfg.list_len, cfg.lr, cfg.epsilon, cfg.beta_kl) == \
        (5, 5.0, 0.2, 0.04)
    assert (cfg.steps, cfg.mode, cfg.reward, cfg.temperature) == \
        (400, "blade", "ndcg@5", 1.0)
    assert (cfg.ref_temperature, cfg.target_len) == (0.25, 5)


def test_parse_config_text():
    text = """
    # comment line
    tau = 0.5   # trailing comment
    group_size = 8
    reward = fair@5:lambda=0.5
    dataset = None
    mode = static
    """
    assert parse_config_text(text) == {"tau": 0.5, "group_size": 8,
                                       "reward": "fair@5:lambda=0.5",
                                       "dataset": None, "mode": "static"}


@pytest.mark.parametrize("text,value", [("0.5", 0.5), ("16", 16),
                                        ("None", None), ("ndcg@5", "ndcg@5"),
                                        ("'static'", "static")])
def test_parse_value(text, value):
    assert parse_value(text) == value


@pytest.mark.parametrize("text,lineno", [("tau = 0.5\nbogus = 1", 2),
                                         ("tau 0.5", 1)])
def test_parse_config_text_errors(text, lineno):
    with pytest.raises(ValueError) as exc:
        parse_config_text(text)
    assert f"line {lineno}" in str(exc.value)


def test_import_config_precedence(tmp_path):
    path = tmp_path / "exp.cfg"
    path.write_text("tau = 0.5\nsteps = 10\n", encoding="utf-8")
    cfg = import_config(str(path))
    assert (cfg.tau, cfg.steps, cfg.group_size) == (0.5, 10, 16)
    cfg = cfg.override(steps=3, tau=None)
    assert (cfg.tau, cfg.steps) == (0.5, 3)
    base = ExperimentConfig(seed=9)
    assert import_config(str(path), base).seed == 9


def test_import_config_missing(tmp_path):
    with pytest.raises(FileNotFoundError):
        import_config(str(tmp_path / "nope.cfg"))


def test_override_unknown_key():
    with pytest.raises(ValueError):
        ExperimentConfig().override(bogus=1)


@pytest.mark.parametrize("kwargs", [{"mode": "other"}, {"reward": "x@1"},
                                    {"eval_reward": "ndcg"}])
def test_invalid_values(kwargs):
    with pytest.raises(ValueError):
        ExperimentConfig(**kwargs)


@pytest.mark.parametrize("mode,tau", [("blade", 0.3), ("static", 0.0)])
def test_train_config(mode, tau):
    cfg = ExperimentConfig(mode=mode, eval_reward="recall@5", steps=7,
                           lr_schedule="linear")
    train = cfg.train_config()
    assert train.dynamic.estimator == mode
    assert train.dynamic.effective_tau == tau
    assert train.reward_spec == RewardSpec("ndcg", 5)
    assert train.evaluation_spec == RewardSpec("recall", 5)
    assert train.total_steps == 7
    assert train.lr_at(7) == 0.0


def test_warm_start_config():
    cfg = ExperimentConfig(ref_size=32, sft_lr=0.5, seed=4,
                           ref_temperature=0.5).warm_start_config()
    assert (cfg.ref_size, cfg.lr, cfg.seed, cfg.teacher) == \
        (32, 0.5, 4, "genre")
    assert cfg.temperature == 0.5
    with pytest.raises(ValueError):
        ExperimentConfig(ref_temperature=0.0).warm_start_config()


@pytest.mark.parametrize("path", sorted(CONFIG_DIR.glob("*.cfg")),
                         ids=lambda p: p.name)
def test_packaged_configs(path):
    cfg = import_config(str(path))
    cfg.train_config()
    cfg.warm_start_config()
