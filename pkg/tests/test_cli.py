"""Command-line behavior: outputs, determinism, exit-code contract."""

import hashlib
import json

import pytest

from conftest import HOLDINGS_FIXTURE, chain_spec, triangle_spec
from satsrail.cli import main
from satsrail.util import canonical_json


@pytest.fixture
def scenario_file(tmp_path):
    raw = {
        "treasury": {
            "btc_core_sats": 0,
            "cash0_cents": 0,
            "opex_monthly_cents": 3_400,
            "horizon_months": 24,
            "sleeve_fraction": 0.0,
        },
        "market": {"model": "stress", "kind": "linear", "total_drawdown": 0.70},
        "start_price_cents": 10_000_000,
        "graph": {
            "nodes": ["hub", "shopco"],
            "hub": "hub",
            "channels": [
                {
                    "id": "hub-shopco",
                    "a": "hub",
                    "b": "shopco",
                    "capacity_msat": 1_000_000_000_000,
                    "balance_a_msat": 1_000_000_000_000,
                    "policy_ab": {"base_msat": 0, "ppm": 0},
                    "policy_ba": {"base_msat": 0, "ppm": 0},
                }
            ],
        },
        "merchants": [
            {
                "id": "shopco",
                "monthly_gmv_cents": 1_000_000,
                "take_rate_bps": 30,
                "settle_mode": "fiat",
            }
        ],
        "rail": {
            "median_ticket_cents": 100_000,
            "ticket_sigma": 0.0,
            "spread_bps": 5,
            "max_route_retries": 0,
        },
    }
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(raw))
    return path


class TestSimulate:
    def test_minimal_run(self, scenario_file, tmp_path, capsys):
        out = tmp_path / "report.json"
        code = main(
            ["simulate", "--config", str(scenario_file), "--out", str(out)]
        )
        assert code == 0
        assert out.exists()
        summary = capsys.readouterr().out
        assert "survival_probability=1.0000" in summary

    def test_zero_paths_usage_error(self, scenario_file, tmp_path):
        with pytest.raises(SystemExit) as exc:
            main(
                [
                    "simulate",
                    "--config",
                    str(scenario_file),
                    "--paths",
                    "0",
                    "--out",
                    str(tmp_path / "r.json"),
                ]
            )
        assert exc.value.code == 2

    def test_byte_identical_reports(self, scenario_file, tmp_path):
        out1 = tmp_path / "r1.json"
        out2 = tmp_path / "r2.json"
        for out in (out1, out2):
            assert main(["simulate", "--config", str(scenario_file), "--out", str(out)]) == 0
        h1 = hashlib.sha256(out1.read_bytes()).hexdigest()
        h2 = hashlib.sha256(out2.read_bytes()).hexdigest()
        assert h1 == h2

    def test_invalid_config_names_key(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"market": {"model": "gbm"}}))
        code = main(["simulate", "--config", str(bad), "--out", str(tmp_path / "r.json")])
        assert code == 2
        assert "treasury" in capsys.readouterr().err

    def test_missing_config_file(self, tmp_path, capsys):
        code = main(
            ["simulate", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path / "r.json")]
        )
        assert code == 2

    def test_csv_emitted(self, scenario_file, tmp_path):
        out = tmp_path / "r.json"
        csv_out = tmp_path / "series.csv"
        main(
            [
                "simulate",
                "--config",
                str(scenario_file),
                "--out",
                str(out),
                "--csv",
                str(csv_out),
            ]
        )
        lines = csv_out.read_text().strip().split("\n")
        assert lines[0].startswith("path,month,price,cash")
        assert len(lines) == 1 + 24

    def test_config_dir_env_fallback(self, scenario_file, tmp_path, monkeypatch):
        monkeypatch.setenv("SATSRAIL_CONFIG_DIR", str(scenario_file.parent))
        monkeypatch.chdir(tmp_path)
        out = tmp_path / "r.json"
        code = main(["simulate", "--config", scenario_file.name, "--out", str(out)])
        assert code == 0
        assert out.exists()

    def test_seed_override_changes_nothing_for_stress(self, scenario_file, tmp_path):
        # Deterministic market: seed override must not change the verdict.
        out1 = tmp_path / "a.json"
        out2 = tmp_path / "b.json"
        main(["simulate", "--config", str(scenario_file), "--out", str(out1)])
        main(["simulate", "--config", str(scenario_file), "--seed", "99", "--out", str(out2)])
        a = json.loads(out1.read_text())
        b = json.loads(out2.read_text())
        assert a["survival_probability"] == b["survival_probability"]


class TestStress:
    def test_preset_defaults(self, scenario_file, tmp_path):
        out = tmp_path / "r.json"
        code = main(["stress", "--config", str(scenario_file), "--out", str(out)])
        assert code == 0
        payload = json.loads(out.read_text())
        market = payload["config"]["market"]
        assert market == {
            "model": "stress",
            "kind": "linear",
            "total_drawdown": 0.70,
            "horizon_months": 24,
        }
        assert payload["num_paths"] == 1

    def test_endpoint_at_thirty_percent(self, scenario_file, tmp_path):
        out = tmp_path / "r.json"
        main(
            [
                "stress",
                "--config",
                str(scenario_file),
                "--drawdown",
                "0.70",
                "--months",
                "24",
                "--out",
                str(out),
            ]
        )
        payload = json.loads(out.read_text())
        months = payload["paths"][0]["months"]
        assert months[-1]["price_cents"] == 3_000_000

    def test_zero_drawdown_survives_when_covered(self, scenario_file, tmp_path):
        out = tmp_path / "r.json"
        main(
            [
                "stress",
                "--config",
                str(scenario_file),
                "--drawdown",
                "0",
                "--months",
                "18",
                "--out",
                str(out),
            ]
        )
        payload = json.loads(out.read_text())
        assert payload["survival_probability"] == 1.0

    def test_drawdown_at_one_rejected(self, scenario_file, tmp_path):
        with pytest.raises(SystemExit) as exc:
            main(
                [
                    "stress",
                    "--config",
                    str(scenario_file),
                    "--drawdown",
                    "1.0",
                    "--out",
                    str(tmp_path / "r.json"),
                ]
            )
        assert exc.value.code == 2


class TestMnav:
    def test_fixture_table(self, capsys):
        code = main(
            ["mnav", "--holdings", str(HOLDINGS_FIXTURE), "--price", "110300"]
        )
        assert code == 0
        out = capsys.readouterr().out
        lines = out.strip().split("\n")
        assert lines[0].split() == [
            "TICKER",
            "BTC_HELD",
            "MKT_CAP_USD",
            "MNAV",
            "BTC_PER_SHARE",
        ]
        mstr = next(line for line in lines if line.startswith("MSTR"))
        assert abs(float(mstr.split()[3]) - 1.095) <= 0.005
        # Sorted by BTC held, descending.
        tickers = [line.split()[0] for line in lines[1:]]
        assert tickers[0] == "MSTR" and tickers[-1] == "CANG"

    def test_synthetic_identity_row(self, tmp_path, capsys):
        p = tmp_path / "h.csv"
        p.write_text(
            "ticker,btc_held,mkt_cap_usd,shares_outstanding\nEQ,100,11030000,\n"
        )
        main(["mnav", "--holdings", str(p), "--price", "110300"])
        out = capsys.readouterr().out
        assert "1.000" in out

    def test_malformed_row_exit_1(self, tmp_path, capsys):
        p = tmp_path / "h.csv"
        p.write_text(
            "ticker,btc_held,mkt_cap_usd,shares_outstanding\nAAA,xx,1,\n"
        )
        assert main(["mnav", "--holdings", str(p), "--price", "110300"]) == 1
        assert "row 1" in capsys.readouterr().err

    def test_csv_output(self, tmp_path):
        out = tmp_path / "mnav.csv"
        main(
            [
                "mnav",
                "--holdings",
                str(HOLDINGS_FIXTURE),
                "--price",
                "110300",
                "--csv",
                str(out),
            ]
        )
        lines = out.read_text().strip().split("\n")
        assert lines[0] == "ticker,btc_held,mkt_cap_usd,mnav,btc_per_share"
        assert len(lines) == 11


class TestRoute:
    @pytest.fixture
    def graph_file(self, tmp_path):
        path = tmp_path / "graph.json"
        path.write_text(json.dumps(chain_spec(policies=(0, 0))))
        return path

    @pytest.fixture
    def fee_graph_file(self, tmp_path):
        path = tmp_path / "graph.json"
        path.write_text(json.dumps(chain_spec()))
        return path

    def test_direct_zero_fee(self, graph_file, capsys):
        code = main(
            [
                "route",
                "--graph",
                str(graph_file),
                "--from",
                "A",
                "--to",
                "B",
                "--amount-sats",
                "1000",
            ]
        )
        assert code == 0
        out = capsys.readouterr().out
        assert "1 hop" in out
        assert "total fee 0 msat" in out

    def test_infeasible_no_route(self, graph_file, capsys):
        code = main(
            [
                "route",
                "--graph",
                str(graph_file),
                "--from",
                "A",
                "--to",
                "C",
                "--amount-sats",
                "999999999",
            ]
        )
        assert code == 1
        assert "no route" in capsys.readouterr().out

    def test_unknown_node(self, graph_file):
        code = main(
            [
                "route",
                "--graph",
                str(graph_file),
                "--from",
                "A",
                "--to",
                "nope",
                "--amount-sats",
                "10",
            ]
        )
        assert code == 2

    def test_fee_composition_on_chain(self, fee_graph_file, capsys):
        # 1_000_000 sats = 1e9 msat through one intermediary: fee 101_000.
        code = main(
            [
                "route",
                "--graph",
                str(fee_graph_file),
                "--from",
                "A",
                "--to",
                "C",
                "--amount-sats",
                "1000000",
            ]
        )
        assert code == 0
        out = capsys.readouterr().out
        assert "total fee 101000 msat" in out
        assert "fee 101000 msat" in out


class TestCorr:
    def _write(self, path, rows):
        path.write_text("date,price\n" + "\n".join(f"{d},{p}" for d, p in rows) + "\n")

    @pytest.fixture
    def series_file(self, tmp_path):
        p = tmp_path / "a.csv"
        self._write(
            p,
            [
                ("2024-01-01", 100.0),
                ("2024-01-02", 104.0),
                ("2024-01-03", 101.0),
                ("2024-01-04", 110.0),
            ],
        )
        return p

    def test_self_correlation(self, series_file, capsys):
        code = main(["corr", "--a", str(series_file), "--b", str(series_file)])
        assert code == 0
        assert capsys.readouterr().out.strip() == "1.00000"

    def test_negative_affine_map(self, series_file, tmp_path, capsys):
        # Prices must stay positive, so negate via an affine flip.
        p = tmp_path / "b.csv"
        self._write(
            p,
            [
                ("2024-01-01", 1000.0 - 100.0),
                ("2024-01-02", 1000.0 - 104.0),
                ("2024-01-03", 1000.0 - 101.0),
                ("2024-01-04", 1000.0 - 110.0),
            ],
        )
        code = main(["corr", "--a", str(series_file), "--b", str(p)])
        assert code == 0
        assert capsys.readouterr().out.strip() == "-1.00000"

    def test_returns_flag(self, series_file, tmp_path, capsys):
        # Doubled levels have identical returns: corr 1 either way, but the
        # flag exercises the returns branch.
        p = tmp_path / "b.csv"
        self._write(
            p,
            [
                ("2024-01-01", 200.0),
                ("2024-01-02", 208.0),
                ("2024-01-03", 202.0),
                ("2024-01-04", 220.0),
            ],
        )
        code = main(["corr", "--a", str(series_file), "--b", str(p), "--returns"])
        assert code == 0
        assert capsys.readouterr().out.strip() == "1.00000"

    def test_no_overlap_exit_1(self, series_file, tmp_path, capsys):
        p = tmp_path / "b.csv"
        self._write(p, [("2030-01-01", 5.0), ("2030-01-02", 6.0)])
        assert main(["corr", "--a", str(series_file), "--b", str(p)]) == 1
        assert "overlap" in capsys.readouterr().err


class TestHelp:
    @pytest.mark.parametrize(
        "sub", ["simulate", "stress", "mnav", "route", "corr"]
    )
    def test_help_exits_zero(self, sub, capsys):
        with pytest.raises(SystemExit) as exc:
            main([sub, "--help"])
        assert exc.value.code == 0
        assert "--" in capsys.readouterr().out

    def test_unknown_flag_rejected(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["corr", "--bogus"])
        assert exc.value.code == 2
