import math

import numpy as np
import pytest
import yaml

from thermval.building import (BuildingModel, ModelError, dump_building, load_building, load_shade,
                               save_building)
from thermval.config import ConfigError, data_path, load_config
from thermval.formats import SeriesFormatError, load_series, save_series
from thermval.geometry import diffuse_blocked_fraction
from thermval.weather import (COLUMNS, WeatherFormatError, daily_diffuse_fraction, load_weather,
                              save_weather, synth_weather)


class TestWeatherFile:
    def test_demo_file(self, demo_weather):
        assert len(demo_weather) == 240
        assert demo_weather.flags.sum() == 0
        assert demo_weather.step == 1800.0

    def test_round_trip(self, tmp_path, demo_weather):
        p = tmp_path / "w.csv"
        save_weather(demo_weather, p)
        back = load_weather(p)
        for c in COLUMNS[1:]:
            np.testing.assert_array_equal(getattr(back, c), getattr(demo_weather, c))
        np.testing.assert_array_equal(back.time, demo_weather.time)
        assert p.read_bytes() == data_path("demo_weather").read_bytes()

    def write(self, tmp_path, rows, header=",".join(COLUMNS)):
        p = tmp_path / "w.csv"
        p.write_text(header + "\n" + "\n".join(rows) + "\n")
        return p

    def test_inconsistent_row_flagged(self, tmp_path):
        p = self.write(tmp_path, ["2000-01-01T12:00,25,10,70,300,100,2,90",
                                  "2000-01-01T12:30,25,10,70,300,400,2,90"])
        w = load_weather(p)
        assert w.flags.tolist() == [False, True]

    def test_malformed_row_line_number(self, tmp_path):
        p = self.write(tmp_path, ["2000-01-01T12:00,25,10,70,300,100,2,90",
                                  "2000-01-01T12:30,25,ten,70,300,100,2,90"])
        with pytest.raises(WeatherFormatError, match=":3:"):
            load_weather(p)

    def test_missing_column_named(self, tmp_path):
        p = self.write(tmp_path, ["2000-01-01T12:00,25,10,70,300,2,90"],
                       header="timestamp,t_out,t_sky,rh,global_h,wind_speed,wind_dir")
        with pytest.raises(WeatherFormatError, match="diffuse_h"):
            load_weather(p)

    def test_non_uniform_step(self, tmp_path):
        p = self.write(tmp_path, ["2000-01-01T12:00,25,10,70,300,100,2,90",
                                  "2000-01-01T12:30,25,10,70,300,100,2,90",
                                  "2000-01-01T13:30,25,10,70,300,100,2,90"])
        with pytest.raises(WeatherFormatError, match="non-uniform"):
            load_weather(p)

    def test_humidity_range(self, tmp_path):
        p = self.write(tmp_path, ["2000-01-01T12:00,25,10,170,300,100,2,90"])
        with pytest.raises(WeatherFormatError):
            load_weather(p)


class TestSynthWeather:
    def test_overcast(self):
        w = synth_weather(3, "overcast", seed=1)
        np.testing.assert_array_equal(w.diffuse_h, w.global_h)

    def test_night_is_dark(self):
        w = synth_weather(2, "mixed", seed=1)
        hours = (w.time - w.time.astype("datetime64[D]")).astype(int) / 3600
        night = (hours < 4) | (hours > 21)
        assert np.all(w.global_h[night] == 0) and np.all(w.diffuse_h[night] == 0)

    def test_mixed_diffuse_fraction(self):
        w = synth_weather(5, "mixed", seed=5)
        kd = daily_diffuse_fraction(w)
        assert w.diffuse_h.sum() / w.global_h.sum() == pytest.approx(0.4, abs=0.05)
        assert kd.mean() == pytest.approx(0.4, abs=0.05)

    @pytest.mark.parametrize("seed", range(6))
    def test_mixed_period_fraction_any_seed(self, seed):
        w = synth_weather(5, "mixed", seed=seed)
        assert w.diffuse_h.sum() / w.global_h.sum() == pytest.approx(0.4, abs=0.05)

    def test_clear_fraction(self):
        kd = daily_diffuse_fraction(synth_weather(3, "clear", seed=0))
        np.testing.assert_allclose(kd, 0.2, atol=0.01)

    def test_seeded(self):
        a, b = synth_weather(2, seed=9), synth_weather(2, seed=9)
        np.testing.assert_array_equal(a.global_h, b.global_h)
        assert not np.array_equal(a.t_out, synth_weather(2, seed=10).t_out)

    def test_consistent(self):
        w = synth_weather(5, "mixed", seed=3)
        assert not w.flags.any() and np.all(w.diffuse_h >= 0)
        assert np.all((w.rh >= 0) & (w.rh <= 100))

    def test_bad_arguments(self):
        with pytest.raises(ValueError):
            synth_weather(0)
        with pytest.raises(ValueError):
            synth_weather(1, "foggy")


class TestBuildingFile:
    def test_demo(self, demo_model):
        assert len(demo_model.zones) == 5
        assert demo_model.windows[0].shade_assembly().top_flap.lateral_extent == 4.2

    def test_round_trip(self, tmp_path, demo_model):
        p = tmp_path / "b.yaml"
        save_building(demo_model, p)
        back = load_building(p)
        assert back.to_dict() == demo_model.to_dict()
        assert dump_building(back) == p.read_text()

    def test_inf_token(self, demo_model):
        win = demo_model.windows[1]
        assert math.isinf(win.shade["top_flap"].lateral_extent)
        text = dump_building(demo_model)
        assert "lateral_extent: inf" in text
        # honoured as the unbounded limit
        assert diffuse_blocked_fraction(win.shade_assembly()) > 0

    def test_dangling_zone_names_window(self, demo_model):
        doc = demo_model.to_dict()
        doc["windows"][2]["zone"] = "attic"
        with pytest.raises(ModelError, match="bed1_win") as exc:
            BuildingModel.from_dict(doc)
        assert exc.value.path == "windows[2].zone"

    def test_field_path_in_errors(self, demo_model):
        doc = demo_model.to_dict()
        doc["walls"][3]["layers"][1]["thickness"] = -0.1
        with pytest.raises(ModelError) as exc:
            BuildingModel.from_dict(doc)
        assert exc.value.path == "walls[3].layers[1].thickness"

    def test_bad_shade_element(self, demo_model):
        doc = demo_model.to_dict()
        doc["windows"][0]["shade"]["awning"] = {"depth": 1}
        with pytest.raises(ModelError, match="awning"):
            BuildingModel.from_dict(doc)

    def test_shade_file(self, demo_model):
        shade = load_shade(data_path("demo_shade"))
        assert diffuse_blocked_fraction(shade) == diffuse_blocked_fraction(demo_model.windows[0].shade_assembly())


class TestConfig:
    def test_load(self, tmp_path):
        (tmp_path / "w.csv").write_bytes(data_path("demo_weather").read_bytes())
        p = tmp_path / "run.yaml"
        p.write_text(yaml.safe_dump({"paths": {"weather": "w.csv", "building": "demo_building"},
                                     "sensitivity": {"n_runs": 64}, "acceptance": {"band": 0.3}, "seed": 4}))
        cfg = load_config(p)
        assert cfg.paths["weather"] == tmp_path / "w.csv"
        assert cfg.sensitivity.n_runs == 64 and cfg.acceptance.band == 0.3 and cfg.seed == 4

    def test_missing_file(self, tmp_path):
        p = tmp_path / "run.yaml"
        p.write_text("paths: {weather: nowhere.csv}\n")
        with pytest.raises(ConfigError, match="nowhere.csv"):
            load_config(p)

    def test_unknown_key(self, tmp_path):
        p = tmp_path / "run.yaml"
        p.write_text("dsp: {cutof: 0.1}\n")
        with pytest.raises(ConfigError, match="cutof"):
            load_config(p)


class TestSeriesFile:
    def test_round_trip(self, tmp_path):
        t = np.datetime64("2000-01-01T00:00") + np.arange(5) * np.timedelta64(30, "m")
        v = np.array([0.1, -2.5, 1e-17, 3.0, 1 / 3])
        p = tmp_path / "s.csv"
        save_series(p, t, v, "t_air", "note")
        t2, v2 = load_series(p)
        np.testing.assert_array_equal(t2, t)
        np.testing.assert_array_equal(v2, v)

    def test_missing_column(self, tmp_path):
        p = tmp_path / "s.csv"
        p.write_text("time,value\n2000-01-01T00:00,1\n")
        with pytest.raises(SeriesFormatError, match="timestamp"):
            load_series(p)
