import json
import os

import numpy as np
import pytest

from sparsepaint import pnm
from sparsepaint.cli import (PipelineConfig, box_downscale,
                             build_pipeline_config, load_config_file, main)
from sparsepaint.grid import Image


def run(args):
    return main(args)


class TestEval:
    def test_identical_images_report_exact(self, tmp_path, capsys):
        img = Image(np.full((1, 8, 8), 10.0))
        p = tmp_path / "a.pgm"
        pnm.write_image(p, img)
        assert run(["eval", str(p), str(p)]) == 0
        assert "psnr=exact" in capsys.readouterr().out

    def test_missing_file_exits_two(self, tmp_path, capsys):
        assert run(["eval", str(tmp_path / "no.pgm"),
                    str(tmp_path / "no.pgm")]) == 2
        assert "error:" in capsys.readouterr().err


class TestInpaintCommand:
    def test_full_mask_roundtrips_exactly(self, tmp_path):
        rng = np.random.default_rng(0)
        img = Image(np.rint(rng.uniform(0, 255, (1, 16, 16))))
        ipath = tmp_path / "in.pgm"
        mpath = tmp_path / "m.pbm"
        vpath = tmp_path / "v.pgm"
        opath = tmp_path / "out.pgm"
        pnm.write_image(ipath, img)
        from sparsepaint.grid import Mask
        full = Mask(np.ones((16, 16)))
        pnm.write_mask(mpath, full)
        pnm.write_tonal(vpath, img, full)
        rc = run(["inpaint", "--mask", str(mpath), "--values", str(vpath),
                  "--output", str(opath)])
        assert rc == 0
        assert opath.read_bytes() == ipath.read_bytes()

    def test_golden_fixture_psnr(self, tmp_path, fixdir, capsys):
        golden = json.load(open(os.path.join(fixdir, "golden32.json")))
        rc = run(["inpaint",
                  "--mask", os.path.join(fixdir, "golden32.mask.pbm"),
                  "--values", os.path.join(fixdir, "golden32.values.pgm"),
                  "--output", str(tmp_path / "r.pgm"),
                  "--reference", os.path.join(fixdir, "golden32.pgm"),
                  "--dtype", "float64", "--tol", "1e-8"])
        assert rc == 0
        out = capsys.readouterr().out
        psnr = float(out.strip().split("psnr=")[1])
        assert abs(psnr - golden["psnr"]) <= 0.01

    def test_missing_mask_exits_two(self, tmp_path):
        assert run(["inpaint", "--mask", str(tmp_path / "no.pbm"),
                    "--values", str(tmp_path / "no.pgm"),
                    "--output", str(tmp_path / "o.pgm")]) == 2


class TestOptimizeCommand:
    def test_artifacts_and_exact_count(self, tmp_path, fixdir, textured64,
                                       capsys):
        ipath = tmp_path / "t64.pgm"
        pnm.write_image(ipath, textured64)
        prefix = tmp_path / "run"
        rc = run(["optimize", "--input", str(ipath),
                  "--output-prefix", str(prefix),
                  "--density", "0.05", "--spatial", "dd", "--tonal", "ras+vi",
                  "--iterations", "6", "--seed", "7"])
        assert rc == 0
        mask = pnm.read_mask(f"{prefix}.mask.pbm")
        assert mask.count == 204
        out = capsys.readouterr().out.strip().split(",")
        assert out[0] == "0.05" and out[1] == "dd" and out[2] == "ras+vi"
        for suffix in ("mask.pbm", "values.pgm", "values16.pgm", "recon.pgm",
                       "spatial.csv", "tonal.csv"):
            assert os.path.exists(f"{prefix}.{suffix}")

    def test_tonal_never_hurts(self, tmp_path, textured64):
        ipath = tmp_path / "t64.pgm"
        pnm.write_image(ipath, textured64)
        results = {}
        for tonal in ("none", "ras+vi"):
            prefix = tmp_path / f"run_{tonal.replace('+', '_')}"
            rc = run(["optimize", "--input", str(ipath),
                      "--output-prefix", str(prefix),
                      "--density", "0.05", "--spatial", "dd",
                      "--tonal", tonal, "--iterations", "6", "--seed", "1"])
            assert rc == 0
            recon = pnm.read_image(f"{prefix}.recon.pgm")
            diff = recon.data - textured64.data
            results[tonal] = float(np.mean(diff * diff))
        assert results["ras+vi"] <= results["none"]

    def test_seeded_reruns_are_byte_identical(self, tmp_path, textured64):
        ipath = tmp_path / "t64.pgm"
        pnm.write_image(ipath, textured64)
        blobs = []
        for attempt in range(2):
            prefix = tmp_path / f"det{attempt}"
            rc = run(["optimize", "--input", str(ipath),
                      "--output-prefix", str(prefix),
                      "--density", "0.04", "--spatial", "dd",
                      "--tonal", "voronoi-init", "--iterations", "4",
                      "--seed", "11", "--deterministic-output"])
            assert rc == 0
            blobs.append(tuple(
                open(f"{prefix}.{sfx}", "rb").read()
                for sfx in ("mask.pbm", "values.pgm", "values16.pgm",
                            "recon.pgm", "spatial.csv", "tonal.csv")))
        assert blobs[0] == blobs[1]


class TestMaskAndTonalCommands:
    def test_mask_then_tonal(self, tmp_path, textured64):
        ipath = tmp_path / "t64.pgm"
        pnm.write_image(ipath, textured64)
        mpath = tmp_path / "m.pbm"
        rc = run(["mask", "--input", str(ipath), "--output", str(mpath),
                  "--density", "0.05", "--spatial", "aa"])
        assert rc == 0
        assert pnm.read_mask(mpath).count == 204
        rc = run(["tonal", "--input", str(ipath), "--mask", str(mpath),
                  "--output-values", str(tmp_path / "g.pgm"),
                  "--output-recon", str(tmp_path / "r.pgm"),
                  "--csv", str(tmp_path / "t.csv"),
                  "--tonal", "balance"])
        assert rc == 0
        assert os.path.exists(tmp_path / "g.pgm.wide")
        header = open(tmp_path / "t.csv").readline().strip()
        assert header == "iteration,mse,psnr,seconds,inner_solves"


class TestSweepCommand:
    def test_single_row_and_schema(self, tmp_path, textured64):
        corpus = tmp_path / "corpus"
        corpus.mkdir()
        pnm.write_image(corpus / "img.pgm", textured64)
        csv_path = tmp_path / "sweep.csv"
        rc = run(["sweep", "--corpus", str(corpus), "--densities", "0.05",
                  "--csv", str(csv_path), "--spatial", "aa",
                  "--tonal", "none"])
        assert rc == 0
        lines = csv_path.read_text().strip().splitlines()
        assert lines[0] == ("image,width,height,density,spatial,tonal,"
                            "mask_count,mse,psnr,seconds,status")
        assert len(lines) == 2
        assert lines[1].endswith("ok")

    def test_empty_densities_is_usage_error(self, tmp_path):
        corpus = tmp_path / "corpus"
        corpus.mkdir()
        rc = run(["sweep", "--corpus", str(corpus), "--densities", "",
                  "--csv", str(tmp_path / "s.csv")])
        assert rc == 2


class TestConfigHandling:
    def test_file_and_flag_precedence(self, tmp_path):
        cfg_file = tmp_path / "run.cfg"
        cfg_file.write_text(
            "# solver settings\ndensity = 0.10\nblock=16\ndtype=float64\n")
        import argparse
        ns = argparse.Namespace(config=str(cfg_file), density=0.2)
        cfg = build_pipeline_config(ns)
        assert cfg.density == 0.2      # flag wins
        assert cfg.block == 16         # file applies
        assert cfg.dtype == "float64"

    def test_unknown_key_rejected(self, tmp_path):
        cfg_file = tmp_path / "run.cfg"
        cfg_file.write_text("no_such_key=1\n")
        import argparse
        with pytest.raises(ValueError):
            build_pipeline_config(argparse.Namespace(config=str(cfg_file)))

    def test_method_names_validated(self):
        cfg = PipelineConfig(spatial="nope")
        with pytest.raises(ValueError):
            cfg.validate()

    def test_bool_coercion(self, tmp_path):
        cfg_file = tmp_path / "run.cfg"
        cfg_file.write_text("deterministic-output=true\n")
        assert load_config_file(cfg_file) == {"deterministic_output": "true"}
        import argparse
        cfg = build_pipeline_config(
            argparse.Namespace(config=str(cfg_file)))
        assert cfg.deterministic_output is True


class TestBoxDownscale:
    def test_integer_factor_average(self):
        img = Image(np.arange(16.0).reshape(1, 4, 4))
        out = box_downscale(img, 2)
        assert out.shape == (1, 2, 2)
        assert out.data[0, 0, 0] == (0 + 1 + 4 + 5) / 4

    def test_no_op_when_already_small(self, textured64):
        out = box_downscale(textured64, 64)
        assert np.array_equal(out.data, textured64.data)


class TestSparsificationPath:
    def test_ps_nlpe_mask_command(self, tmp_path):
        rng = np.random.default_rng(6)
        yy, xx = np.mgrid[0:16, 0:16].astype(float)
        img = Image((100 + 90 * (xx > 8) + 5 * np.sin(yy))[None])
        ipath = tmp_path / "i.pgm"
        pnm.write_image(ipath, img)
        mpath = tmp_path / "m.pbm"
        rc = run(["mask", "--input", str(ipath), "--output", str(mpath),
                  "--density", "0.1", "--spatial", "ps+nlpe",
                  "--nlpe-cycles", "1", "--nlpe-candidates", "2",
                  "--seed", "5"])
        assert rc == 0
        assert pnm.read_mask(mpath).count == 25
