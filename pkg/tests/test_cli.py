import json

import numpy as np
import pytest

from modsr.checkpoint import config_hash, save_checkpoint
from modsr.cli import main
from modsr.images import load_image, save_image, synthetic_image
from modsr.nets import NetConfig, init_params

TINY = NetConfig(udem_channels=4, udem_blocks=2, gen_channels=4, gen_blocks=2, cond_hidden=4)


@pytest.fixture(scope="module")
def ckpt_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("ckpt") / "tiny.ckpt"
    models = init_params(0, TINY, dtype=np.float32)
    save_checkpoint(str(path), models, None, 0, config_hash(TINY))
    return str(path)


@pytest.fixture()
def png_path(tmp_path):
    path = tmp_path / "input.png"
    save_image(synthetic_image(3, 32), str(path))
    return str(path)


def test_unknown_subcommand_exits_1(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 1
    assert "usage" in capsys.readouterr().err.lower()


def test_missing_required_flag_exits_1():
    with pytest.raises(SystemExit) as exc:
        main(["score", "--image", "x.png"])
    assert exc.value.code == 1


def test_runtime_failure_exits_2(tmp_path, png_path):
    rc = main(["score", "--checkpoint", str(tmp_path / "missing.ckpt"),
               "--image", png_path])
    assert rc == 2


def test_score_prints_clamped_json(ckpt_path, png_path, capsys):
    assert main(["score", "--checkpoint", ckpt_path, "--image", png_path]) == 0
    out = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert set(out) == {"s_n", "s_b"}
    assert 0.0 <= out["s_n"] <= 1.0
    assert 0.0 <= out["s_b"] <= 1.0


def test_restore_output_is_4x(ckpt_path, png_path, tmp_path, capsys):
    out_path = tmp_path / "restored.png"
    rc = main(["restore", "--checkpoint", ckpt_path, "--image", png_path,
               "--out", str(out_path), "--scores", "0.5,0.5"])
    assert rc == 0
    restored = load_image(str(out_path))
    assert restored.shape == (3, 128, 128)


def test_degrade_writes_image_and_recipe_sidecar(png_path, tmp_path, capsys):
    out_path = tmp_path / "corrupted.png"
    rc = main(["degrade", "--image", png_path, "--seed", "5",
               "--out", str(out_path)])
    assert rc == 0
    corrupted = load_image(str(out_path))
    assert corrupted.shape == (3, 8, 8)  # 32 / 4
    sidecar = json.loads((tmp_path / "corrupted.png.recipe.json").read_text())
    assert sidecar["seed"] >= 0
    assert sidecar["stages"]


def test_degrade_is_deterministic_per_seed(png_path, tmp_path):
    a, b = tmp_path / "a.png", tmp_path / "b.png"
    main(["degrade", "--image", png_path, "--seed", "9", "--out", str(a)])
    main(["degrade", "--image", png_path, "--seed", "9", "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_sweep_writes_csv_and_summary(ckpt_path, tmp_path, capsys):
    rc = main(["sweep", "--checkpoint", ckpt_path, "--kind", "gaussian-noise",
               "--out-dir", str(tmp_path / "sweeps"), "--images", "5"])
    assert rc == 0
    csv_text = (tmp_path / "sweeps" / "sweep_gaussian-noise.csv").read_text()
    assert csv_text.startswith("level,mean_score,std")
    assert len(csv_text.strip().splitlines()) == 21
    summary = json.loads((tmp_path / "sweeps" / "sweep_summary.json").read_text())
    assert summary[0]["kind"] == "gaussian-noise"


def test_modgrid_writes_grid_and_distances(ckpt_path, tmp_path):
    lr = tmp_path / "lr.png"
    save_image(synthetic_image(11, 16), str(lr))
    rc = main(["modgrid", "--checkpoint", ckpt_path, "--image", str(lr),
               "--out-dir", str(tmp_path / "grid"), "--values", "0,1"])
    assert rc == 0
    dist = json.loads((tmp_path / "grid" / "distances.json").read_text())
    assert len(dist["pairs"]) == 4
    assert (tmp_path / "grid" / "modulation_grid.png").exists()
    assert (tmp_path / "grid" / "restore_sn0_sb1.png").exists()
