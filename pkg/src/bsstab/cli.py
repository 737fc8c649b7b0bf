"""Command-line batch runner: parse a configuration, run the selected suites, write reports."""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .report import VerificationReport, to_csv, to_jsonl
from .stability import ConfigError, StabilityConfig
from .suites import BS_SUITES, VAES_SUITES, bs_claims, bs_suite_names, vaes_claims
from .vaes import VaesConfig

MODES = ("bs", "vaes", "all")


@dataclass
class RunConfig:
    mode: str = "bs"
    p: int = 2
    q: int = 3
    r: int = 1
    primes: tuple[int, ...] = (2, 3, 5, 7, 11)
    nmax: int | None = None
    jmax: int = 8
    samples: int = 10_000
    seed: int = 0
    out: str | None = None
    suites: list[str] = field(default_factory=list)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {', '.join(MODES)}, got {self.mode!r}")
        if self.jmax < 0:
            raise ConfigError(f"jmax must be >= 0, got {self.jmax}")
        if self.samples < 1:
            raise ConfigError(f"samples must be >= 1, got {self.samples}")
        known = set(BS_SUITES) | set(VAES_SUITES)
        unknown = [s for s in self.suites if s not in known]
        if unknown:
            raise ConfigError(f"unknown suite(s) {unknown}; choose from {sorted(known)}")
        # constructing the configs runs their validation
        if self.mode in ("bs", "all"):
            self.stability()
        if self.mode in ("vaes", "all"):
            self.vaes()

    def stability(self) -> StabilityConfig:
        return StabilityConfig(self.p, self.q, self.r, self.jmax, self.samples, self.seed)

    def vaes(self) -> VaesConfig:
        return VaesConfig(tuple(self.primes), self.nmax, self.samples, self.seed)


def parse_config_file(path: str) -> dict:
    """``key = value`` lines; blank lines and ``#`` comments are skipped."""
    out = {}
    for n, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{n}: expected key = value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _int_list(text: str) -> list[int]:
    return [int(v) for v in text.replace(",", " ").split()]


def _coerce(values: dict) -> dict:
    conv = {
        "mode": str,
        "p": int,
        "q": int,
        "r": int,
        "primes": lambda v: tuple(_int_list(v)) if isinstance(v, str) else tuple(v),
        "nmax": lambda v: None if v in (None, "", "none") else int(v),
        "jmax": int,
        "samples": int,
        "seed": int,
        "out": str,
        "suites": lambda v: [s for s in v.replace(",", " ").split()] if isinstance(v, str) else list(v),
    }
    out = {}
    for key, value in values.items():
        if key == "suite":
            key = "suites"
        if key not in conv:
            raise ConfigError(f"unknown configuration key {key!r}")
        try:
            out[key] = conv[key](value)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {value!r}") from exc
    return out


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bsstab", description=__doc__)
    ap.add_argument("--config", help="key = value file; flags override its entries")
    ap.add_argument("--mode", choices=MODES)
    ap.add_argument("-p", type=int)
    ap.add_argument("-q", type=int)
    ap.add_argument("-r", type=int)
    ap.add_argument("--jmax", type=int, help="largest exact level (Monte Carlo runs two further)")
    ap.add_argument("--samples", type=int, help="Monte Carlo sample count")
    ap.add_argument("--seed", type=int, help="base seed")
    ap.add_argument("--primes", help="comma-separated primes for the vaes mode")
    ap.add_argument("--nmax", type=int)
    ap.add_argument("--suite", action="append", help="run only these suites (repeatable or comma-separated)")
    ap.add_argument("--out", help="directory for reports.jsonl, summary.csv and manifest.json")
    return ap


def config_from_args(argv: list[str] | None = None) -> RunConfig:
    args = build_parser().parse_args(argv)
    values = parse_config_file(args.config) if args.config else {}
    flags = {k: v for k, v in vars(args).items() if k != "config" and v is not None}
    if "suite" in flags:
        flags["suite"] = ",".join(flags["suite"])
    values.update(flags)
    return RunConfig(**_coerce(values))


def run(cfg: RunConfig) -> tuple[list[VerificationReport], dict]:
    reports: list[VerificationReport] = []
    required: dict[str, list[str]] = {}
    if cfg.mode in ("bs", "all"):
        scfg = cfg.stability()
        names = [n for n in bs_suite_names(scfg) if not cfg.suites or n in cfg.suites]
        for name, claims in bs_claims(scfg, names).items():
            required[f"bs:{name}"] = claims
        for name in names:
            reports.extend(BS_SUITES[name](scfg, cfg.samples, cfg.seed, cfg.jmax))
    if cfg.mode in ("vaes", "all"):
        vcfg = cfg.vaes()
        names = [n for n in VAES_SUITES if not cfg.suites or n in cfg.suites]
        for name, claims in vaes_claims(names).items():
            required[f"vaes:{name}"] = claims
        for name in names:
            reports.extend(VAES_SUITES[name](vcfg))
    # stable sort: generation order is itself deterministic within a claim
    reports.sort(key=lambda r: r.claim)
    seen = {r.claim for r in reports}
    missing = sorted({c for claims in required.values() for c in claims} - seen)
    manifest = {
        "required": required,
        "claims": {
            c: {
                "reports": sum(1 for r in reports if r.claim == c),
                "pass": all(r.passed for r in reports if r.claim == c),
            }
            for c in sorted(seen)
        },
        "missing": missing,
        "pass": not missing and all(r.passed for r in reports),
    }
    return reports, manifest


def write_outputs(out: str, reports: list[VerificationReport], manifest: dict) -> None:
    d = Path(out)
    d.mkdir(parents=True, exist_ok=True)
    (d / "reports.jsonl").write_text(to_jsonl(reports))
    (d / "summary.csv").write_text(to_csv(reports))
    (d / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def main(argv: list[str] | None = None) -> int:
    try:
        cfg = config_from_args(argv)
    except (ConfigError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    reports, manifest = run(cfg)
    for r in reports:
        print(r.line())
    if manifest["missing"]:
        print(f"MISSING claims without a result: {', '.join(manifest['missing'])}")
    if cfg.out:
        write_outputs(cfg.out, reports, manifest)
    failed = sum(1 for r in reports if not r.passed)
    print(f"{len(reports)} checks, {failed} failed, coverage {'complete' if not manifest['missing'] else 'incomplete'}")
    return 0 if manifest["pass"] else 1


if __name__ == "__main__":
    sys.exit(main())
