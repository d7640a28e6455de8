"""Command-line entry point: ``cvmdi {keyrate,figure1,figure2,validate}``.

Configuration comes from a flat ``key = value`` file (``--config``), then
``--set key=value`` pairs, then the dedicated flags. Every key and its
default is listed in :data:`FIELDS`.
"""
from __future__ import annotations

import argparse
import dataclasses
import io
import math
import sys
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, InfeasibleLossError
from .fading import FadingParams, averaged_key_rate, fixed_channel_key_rate
from .gaussian import Detection, Reference
from .protocols import ProtocolParams, Scheme
from .quadrature import QuadratureKind, QuadratureRule
from .sweeps import SweepResult, figure1, figure2, loss_grid, split_loss
from . import validation

EXIT_OK, EXIT_VALIDATION, EXIT_CONFIG = 0, 1, 2


@dataclass(frozen=True)
class RunConfig:
    # protocol
    v: float = 60.0
    eps_a: float = 0.02
    eps_b: float = 0.02
    xi: float = 1.0
    detection: Detection = Detection.HOMODYNE
    reference: Reference = Reference.ALICE
    scheme: Scheme = Scheme.MDI
    # fading geometry, one shared length unit
    beta: float = 1.0
    w: float = 1.0
    k: float = 1.0
    figure2_k: float = 0.54
    # keyrate: channel = fading uses loss_db, channel = fixed uses tau_a/tau_b
    channel: str = "fading"
    loss_db: float = 10.0
    tau_a: float = 1.0
    tau_b: float = 1.0
    # sweeps
    loss_db_min: float = 2.0
    loss_db_max: float = 40.0
    steps: int = 39
    # numerics
    nodes: int = 16
    quadrature: QuadratureKind = QuadratureKind.GRADED
    clip: bool = True
    # validation
    seed: int = 20240101
    samples: int = 1_000_000
    validate_v: float = 5.05
    validate_tau_a: float = 0.5
    validate_tau_b: float = 0.5
    gain_offset: float = 0.0
    # reporting
    pulse_rate: float = 1e8
    out: str = "."

    def protocol(self) -> ProtocolParams:
        return ProtocolParams(self.v, self.eps_a, self.eps_b, self.detection, self.reference, self.xi, self.scheme)

    def rule(self) -> QuadratureRule:
        return QuadratureRule(self.nodes, self.quadrature)

    def check(self) -> "RunConfig":
        try:
            self.protocol()
            self.rule()
            FadingParams(self.beta, self.w, 0.0)
        except ValueError as e:
            raise ConfigError(str(e)) from None
        if self.channel not in ("fading", "fixed"):
            raise ConfigError(f"channel must be 'fading' or 'fixed', got {self.channel!r}")
        if not (self.k > 0 and self.figure2_k > 0):
            raise ConfigError("sigma_b ratios k and figure2_k must be positive")
        for name in ("tau_a", "tau_b", "validate_tau_a", "validate_tau_b"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1]")
        if self.steps < 1:
            raise ConfigError("steps must be >= 1")
        if self.steps > 1 and not self.loss_db_max > self.loss_db_min:
            raise ConfigError("loss_db_max must exceed loss_db_min")
        if self.samples < 10_000:
            raise ConfigError("samples must be >= 10000")
        if not (self.pulse_rate > 0 and math.isfinite(self.pulse_rate)):
            raise ConfigError("pulse_rate must be positive")
        return self


FIELDS = {f.name: f for f in fields(RunConfig)}


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _convert(name: str, text: str):
    if name not in FIELDS:
        raise ConfigError(f"unknown configuration key {name!r}; valid keys: {', '.join(FIELDS)}")
    default = FIELDS[name].default
    try:
        if isinstance(default, bool):
            return _parse_bool(text)
        if isinstance(default, (Detection, Reference, Scheme, QuadratureKind)):
            return type(default)(text.strip().lower())
        if isinstance(default, int):
            value = float(text)
            if value != int(value):
                raise ValueError("expected an integer")
            return int(value)
        if isinstance(default, float):
            return float(text)
        return text.strip()
    except ValueError as e:
        raise ConfigError(f"bad value for {name}: {text!r} ({e})") from None


def parse_config_text(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key] = _convert(key, value)
    return out


def _format_value(v) -> str:
    if hasattr(v, "value"):
        return str(v.value)
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format(v, ".12g")
    return str(v)


def metadata(cfg: RunConfig, command: str, extra: dict | None = None) -> list[tuple[str, str]]:
    items = [("command", command), ("cvmdi_version", __version__), ("numpy_version", np.__version__)]
    items += [(f.name, _format_value(getattr(cfg, f.name))) for f in fields(RunConfig) if f.name != "out"]
    items += [(k, _format_value(v)) for k, v in (extra or {}).items()]
    return items


def write_csv(stream, meta, result: SweepResult):
    for k, v in meta:
        stream.write(f"# {k}={v}\n")
    stream.write(",".join(result.columns) + "\n")
    for row in result.rows:
        stream.write(",".join(format(float(x), ".12g") for x in row) + "\n")


def _write_file(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _csv_text(meta, result) -> str:
    buf = io.StringIO()
    write_csv(buf, meta, result)
    return buf.getvalue()


def _split_label(k: float) -> str:
    return "equal-split" if k == 1.0 else "sigma-ratio"


def cmd_keyrate(cfg: RunConfig, stdout) -> int:
    pp = cfg.protocol()
    extra = {}
    if cfg.channel == "fixed":
        rate = fixed_channel_key_rate(pp, cfg.tau_a, cfg.tau_b)
    else:
        ch = split_loss(cfg.loss_db, cfg.k, cfg.beta, cfg.w, cfg.rule())
        rate = averaged_key_rate(pp, ch.fa, ch.fb, cfg.rule(), cfg.clip)
        extra = dict(loss_split=_split_label(cfg.k), sigma_b_a=ch.fa.sigma_b, sigma_b_b=ch.fb.sigma_b,
                     mean_tau_a=ch.tau_a, mean_tau_b=ch.tau_b)
    lines = [f"# {k}={v}" for k, v in metadata(cfg, "keyrate", extra)]
    lines.append(f"key_rate_bits_per_pulse={format(rate, '.12g')}")
    lines.append(f"key_rate_bits_per_second={format(rate * cfg.pulse_rate, '.12g')}")
    stdout.write("\n".join(lines) + "\n")
    return EXIT_OK


def cmd_figure1(cfg: RunConfig, stdout) -> int:
    losses = loss_grid(cfg.loss_db_min, cfg.loss_db_max, cfg.steps)
    fading, fixed = figure1(cfg.protocol(), losses, cfg.beta, cfg.w, cfg.rule(), cfg.clip)
    out = Path(cfg.out)
    for name, res, kind in (("figure1_fading.csv", fading, "fading"), ("figure1_fixed.csv", fixed, "fixed")):
        meta = metadata(cfg, "figure1", dict(channel_kind=kind, loss_split="equal-split", k_used=1.0))
        _write_file(out / name, _csv_text(meta, res))
        stdout.write(f"wrote {out / name}\n")
    return EXIT_OK


def cmd_figure2(cfg: RunConfig, stdout) -> int:
    losses = loss_grid(cfg.loss_db_min, cfg.loss_db_max, cfg.steps)
    res = figure2(cfg.protocol(), losses, cfg.figure2_k, cfg.beta, cfg.w, cfg.rule(), cfg.clip)
    meta = metadata(cfg, "figure2", dict(loss_split=_split_label(cfg.figure2_k), xi_values="1;0.95;0.8"))
    path = Path(cfg.out) / "figure2.csv"
    _write_file(path, _csv_text(meta, res))
    stdout.write(f"wrote {path}\n")
    return EXIT_OK


def cmd_validate(cfg: RunConfig, stdout) -> int:
    checks = validation.run_checks(cfg)
    lines = [f"# {k}={v}" for k, v in metadata(cfg, "validate", {"rng": validation.RNG_ALGORITHM})]
    lines.append("name statistic threshold result")
    lines += [c.line() for c in checks]
    stdout.write("\n".join(lines) + "\n")
    return EXIT_OK if all(c.passed for c in checks) else EXIT_VALIDATION


COMMANDS = {"keyrate": cmd_keyrate, "figure1": cmd_figure1, "figure2": cmd_figure2, "validate": cmd_validate}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cvmdi", description="CV-MDI QKD key rates over beam-wander fading channels.")
    parser.add_argument("--version", action="version", version=f"cvmdi {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="flat key = value configuration file")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override one configuration key")
        p.add_argument("--out", help="output directory for CSV files")
        p.add_argument("--nodes", type=int, help="Gauss points per quadrature panel")
        p.add_argument("--no-clip", action="store_true", help="average the raw key rate instead of max(K, 0)")
        p.add_argument("--seed", type=int, help="random seed for the samplers")
        p.add_argument("--pulse-rate", type=float, help="pulses per second for the bits/second view")
    return parser


def load_config(args) -> RunConfig:
    values = {}
    if args.config is not None:
        try:
            text = args.config.read_text()
        except OSError as e:
            raise ConfigError(f"cannot read config file: {e}") from None
        values.update(parse_config_text(text))
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        values[k.strip()] = _convert(k.strip(), v)
    for flag, key in (("out", "out"), ("nodes", "nodes"), ("seed", "seed"), ("pulse_rate", "pulse_rate")):
        if getattr(args, flag) is not None:
            values[key] = getattr(args, flag)
    if args.no_clip:
        values["clip"] = False
    return dataclasses.replace(RunConfig(), **values).check()


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
        return COMMANDS[args.command](cfg, stdout)
    except (ConfigError, InfeasibleLossError) as e:
        stderr.write(f"error: {e}\n")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
