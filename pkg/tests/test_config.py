import math

import pytest

from mfsr.config import KEYS, ExperimentConfig, load_config, parse_config
from mfsr.degradation import NOISELESS
from mfsr.errors import ConfigError


def test_parse_with_comments_and_dotted_keys():
    cfg = parse_config(
        """
        # Table II style cell
        image = builtin:blobs:64   # trailing comment
        frames = 15
        seed = 3
        degrade.snr_db = noiseless
        pocs.max_iters = 7
        reg.m = 1e-5
        reg.step_policy = conjugate-gradient
        """
    )
    assert cfg.image == "builtin:blobs:64"
    assert cfg.frames == 15 and cfg.seed == 3
    assert cfg.degrade_snr_db == NOISELESS
    assert cfg.pocs_config().max_iters == 7
    assert cfg.reg_config(hybrid=False).lambda_model.m == 1e-5
    assert cfg.label == "blobs"


def test_round_trip(tmp_path):
    cfg = ExperimentConfig(image="photos/lena.pgm", degrade_snr_db=math.inf, reg_m=1e-12, seed=4)
    path = tmp_path / "c.cfg"
    path.write_text(cfg.to_text())
    assert load_config(path) == cfg
    assert parse_config(cfg.to_text()).to_text() == cfg.to_text()
    assert cfg.label == "lena"


def test_every_key_is_serialized_once():
    text = ExperimentConfig().to_text()
    keys = [line.split("=")[0].strip() for line in text.splitlines()]
    assert keys == list(KEYS)
    assert "degrade.blur_length" in keys and "output_dir" in keys


@pytest.mark.parametrize(
    "line,key",
    [
        ("frames = 0", "frames"),
        ("pocs.relaxation = 1.5", "pocs.relaxation"),
        ("reg.m = -1", "reg.m"),
        ("algorithm = magic", "algorithm"),
        ("degrade.l1 = two", "degrade.l1"),
        ("nonsense.key = 1", "nonsense.key"),
        ("degrade_l1 = 2", "degrade_l1"),
        ("reg.step_policy = newton", "reg.step_policy"),
    ],
)
def test_errors_name_the_key(line, key):
    with pytest.raises(ConfigError) as exc:
        parse_config(line)
    assert exc.value.key == key


def test_missing_equals_sign():
    with pytest.raises(ConfigError):
        parse_config("frames 4")


def test_fixed_step_policy():
    cfg = parse_config("reg.step_policy = 0.25")
    assert cfg.reg_config(hybrid=True).step_policy == 0.25


def test_defaults_follow_protocol():
    cfg = ExperimentConfig()
    spec = cfg.degradation_spec()
    assert (spec.blur_length, spec.blur_angle, spec.decimation, spec.snr_db) == (5.0, 5.0, (2, 2), 20.0)
    assert cfg.degrade_shift_range == 10.0
    assert (cfg.reg_m, cfg.reg_c) == (1e-10, 0.0)
