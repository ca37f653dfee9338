"""Run configuration (INI syntax), validated before any work starts.

Example::

    [run]
    data_root = /data/cross-language     ; defaults to $XLINGSIM_DATA
    m = 1000
    folds = 10
    seed = 0
    out = results
    both_directions = yes                 ; also evaluate each corpus reversed
    granularities = chunk, sentence       ; optional filter

    [corpus:jrc-chunk]
    manifest = jrc/en-fr.chunk.manifest

    [method:c3g]

    [method:cts]
    lexicon.en-fr = lexicons/en-fr.tsv

    [method:asa]
    table.fr-en = tables/fr-en.tsv        ; p(en word | fr word)
    length_stats.fr-en = tables/fr-en.len

    [fingerprint]
    pair = en-fr
    methods = rand, len, c3g
    pairs_per_corpus = 200
    folds = 10

Resource keys carry their own direction ``<src>-<tgt>``.  Relative paths
resolve against ``data_root``.
"""
from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import Granularity, read_manifest
from .methods import METHOD_LABELS

DATA_ENV = "XLINGSIM_DATA"
RESOURCE_KEYS = ("lexicon", "table", "length_stats", "concepts")


class ConfigError(ValueError):
    pass


@dataclass
class MethodConfig:
    method: str
    resources: dict = field(default_factory=dict)   # (kind, "src-tgt") -> Path
    options: dict = field(default_factory=dict)

    def resource(self, kind: str, src: str, tgt: str) -> "Path | None":
        return self.resources.get((kind, f"{src}-{tgt}"))


@dataclass
class FingerprintConfig:
    pair: str = "en-fr"
    methods: list = field(default_factory=list)
    corpora: list = field(default_factory=list)
    pairs_per_corpus: int = 200
    folds: int = 10


@dataclass
class RunConfig:
    data_root: Path
    corpora: dict            # name -> manifest path
    methods: list            # [MethodConfig]
    m: int = 1000
    folds: int = 10
    seed: int = 0
    out: Path = Path("results")
    both_directions: bool = False
    granularities: "list | None" = None
    pairs: "list | None" = None
    fingerprint: "FingerprintConfig | None" = None
    path: "Path | None" = None

    def method(self, name: str) -> "MethodConfig | None":
        for mc in self.methods:
            if mc.method == name:
                return mc
        return None


def _split_list(value: str) -> list[str]:
    return [v.strip().lower() for v in value.replace(";", ",").split(",") if v.strip()]


def _int(section, key, default, minimum=None) -> int:
    try:
        value = section.getint(key, fallback=default)
    except ValueError:
        raise ConfigError(f"[{section.name}] {key} must be an integer") from None
    if minimum is not None and value < minimum:
        raise ConfigError(f"[{section.name}] {key} must be >= {minimum}")
    return value


def _check_pair(pair: str, where: str) -> str:
    parts = pair.split("-")
    if len(parts) != 2 or not all(parts) or parts[0] == parts[1]:
        raise ConfigError(f"{where}: bad language pair {pair!r}")
    return pair


def load_config(path: "str | Path", data_root: "str | Path | None" = None) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        parser.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None

    run = parser["run"] if parser.has_section("run") else parser[parser.default_section]
    root = data_root or run.get("data_root") or os.environ.get(DATA_ENV) or path.parent
    root = Path(root)
    if not root.is_absolute():
        root = (path.parent / root).resolve()

    def resolve(p: str) -> Path:
        q = Path(p).expanduser()
        return q if q.is_absolute() else root / q

    cfg = RunConfig(
        data_root=root, corpora={}, methods=[],
        m=_int(run, "m", 1000, 1), folds=_int(run, "folds", 10, 1),
        seed=_int(run, "seed", 0, 0),
        out=Path(run.get("out", "results")),
        path=path,
    )
    try:
        cfg.both_directions = run.getboolean("both_directions", fallback=False)
    except ValueError:
        raise ConfigError("[run] both_directions must be yes/no") from None
    if run.get("granularities"):
        cfg.granularities = [Granularity.parse(g).value for g in _split_list(run["granularities"])]
    if run.get("pairs"):
        cfg.pairs = [_check_pair(p, "[run] pairs") for p in _split_list(run["pairs"])]

    for name in parser.sections():
        kind, _, label = name.partition(":")
        sec = parser[name]
        if kind == "corpus":
            if "manifest" not in sec:
                raise ConfigError(f"[{name}] needs a manifest")
            manifest = resolve(sec["manifest"])
            if not manifest.is_file():
                raise ConfigError(f"[{name}] manifest not found: {manifest}")
            meta = read_manifest(manifest)
            for key in ("src_file", "tgt_file"):
                f = manifest.parent / meta[key]
                if not f.is_file():
                    raise ConfigError(f"[{name}] {key} not found: {f}")
            cfg.corpora[label] = manifest
        elif kind == "method":
            if label not in METHOD_LABELS:
                raise ConfigError(f"[{name}] unknown method {label!r}; "
                                  f"choose from {', '.join(METHOD_LABELS)}")
            mc = MethodConfig(label)
            for key, value in sec.items():
                if key in parser.defaults():
                    continue
                res, dot, pair = key.partition(".")
                if dot and res in RESOURCE_KEYS:
                    p = resolve(value)
                    if not p.is_file():
                        raise ConfigError(f"[{name}] {key}: file not found: {p}")
                    mc.resources[(res, _check_pair(pair, f"[{name}] {key}"))] = p
                else:
                    mc.options[key] = value
            cfg.methods.append(mc)
        elif kind == "fingerprint":
            fp = FingerprintConfig(
                pair=_check_pair(sec.get("pair", "en-fr").strip().lower(), "[fingerprint] pair"),
                methods=_split_list(sec.get("methods", "")),
                corpora=[c.strip() for c in sec.get("corpora", "").split(",") if c.strip()],
                pairs_per_corpus=_int(sec, "pairs_per_corpus", 200, 1),
                folds=_int(sec, "folds", 10, 1),
            )
            cfg.fingerprint = fp
        elif name != "run":
            raise ConfigError(f"unknown section [{name}]")

    if not cfg.corpora:
        raise ConfigError("config defines no [corpus:...] sections")
    if not cfg.methods:
        raise ConfigError("config defines no [method:...] sections")
    if cfg.fingerprint:
        for m in cfg.fingerprint.methods:
            if cfg.method(m) is None:
                raise ConfigError(f"[fingerprint] method {m!r} has no [method:{m}] section")
        for c in cfg.fingerprint.corpora:
            if c not in cfg.corpora:
                raise ConfigError(f"[fingerprint] unknown corpus {c!r}")
    return cfg
