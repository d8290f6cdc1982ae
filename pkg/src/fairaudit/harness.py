"""Repeated seeded runs of baseline plus mitigation methods on one task."""
from __future__ import annotations

import hashlib
import json
import logging
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from fairaudit import mitigation as mt
from fairaudit.data import (
    Dataset,
    FeatureEncoder,
    SplitConfig,
    assign_groups,
    load_dataset,
    load_schema,
    recipe_paths,
    split,
    split_indices,
)
from fairaudit.errors import ConfigError, FairAuditError
from fairaudit.metrics import PredictionSet, evaluate
from fairaudit.model import Hyper, apply_threshold, fit_logistic, predict_proba

log = logging.getLogger(__name__)

BASE = "base"
RESULTS_FORMAT = "fairaudit-results/1"
METHOD_ALIASES = {
    "rew": "reweighing",
    "reweighing": "reweighing",
    "eop": "eop",
    "naivebase": "naivebase",
    "cfe": "counterfactual_ensemble",
    "counterfactual_ensemble": "counterfactual_ensemble",
    "selective": "selective",
    "scores": "scores",
}


@dataclass(frozen=True)
class MethodSpec:
    id: str
    kind: str
    params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"id": self.id, "method": self.kind, **self.params}


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: str
    schema: str
    task: tuple[str, ...]
    methods: tuple[MethodSpec, ...] = ()
    runs: int = 20
    split: SplitConfig = SplitConfig()
    surface: str = "test"
    seed: int = 0
    hyper: Hyper = Hyper()
    name: str = ""
    jobs: int = 1
    save_predictions: bool = False

    def __post_init__(self):
        if self.runs < 1:
            raise ConfigError("runs must be >= 1")
        if self.surface not in ("test", "train"):
            raise ConfigError(f"surface must be 'test' or 'train', got {self.surface!r}")
        ids = [m.id for m in self.methods]
        if len(set(ids)) != len(ids) or BASE in ids:
            raise ConfigError(f"method ids must be unique and not {BASE!r}: {ids}")
        seen = set()
        for m in self.methods:
            if m.kind == "selective":
                if m.params.get("of") not in seen:
                    raise ConfigError(f"selective method {m.id!r} must reference an earlier method via 'of'")
                if not m.params.get("scope"):
                    raise ConfigError(f"selective method {m.id!r} needs a non-empty 'scope'")
            if m.kind == "scores" and not m.params.get("path"):
                raise ConfigError(f"scores method {m.id!r} needs a 'path'")
            seen.add(m.id)

    @property
    def task_name(self) -> str:
        if self.name:
            return self.name
        stem = self.dataset.split(":")[-1]
        stem = Path(stem).name.split(".")[0]
        return "-".join([stem, *self.task, "lr"])

    @classmethod
    def from_dict(cls, raw: dict, base_dir: Path | str = ".") -> "ExperimentConfig":
        base_dir = Path(base_dir)
        try:
            dataset = str(raw["dataset"])
        except KeyError:
            raise ConfigError("config needs 'dataset'") from None
        if dataset.startswith("recipe:"):
            data_path, schema_path = recipe_paths(dataset.split(":", 1)[1])
            dataset_ref = dataset
            schema = str(raw.get("schema") or schema_path)
        else:
            dataset_ref = str((base_dir / dataset).resolve())
            if "schema" not in raw:
                raise ConfigError("config needs 'schema' for a non-recipe dataset")
            schema = str((base_dir / raw["schema"]).resolve())
        task = raw.get("task")
        if isinstance(task, str):
            task = [task]
        if not task:
            task = [s["name"] for s in json.loads(Path(schema).read_text())["sensitive"]]
        methods = []
        for m in raw.get("methods", []):
            if isinstance(m, str):
                m = {"method": m}
            m = dict(m)
            name = str(m.pop("method", m.get("id", "")))
            kind = METHOD_ALIASES.get(name)
            if kind is None:
                raise ConfigError(f"unknown method in {m!r}; known: {sorted(METHOD_ALIASES)}")
            mid = str(m.pop("id", name))
            if kind == "scores" and "path" in m:
                m["path"] = str((base_dir / m["path"]).resolve())
            if kind == "selective" and isinstance(m.get("scope"), str):
                m["scope"] = [m["scope"]]
            methods.append(MethodSpec(mid, kind, m))
        split_raw = raw.get("split", {})
        try:
            return cls(
                dataset=dataset_ref,
                schema=schema,
                task=tuple(task),
                methods=tuple(methods),
                runs=int(raw.get("runs", 20)),
                split=SplitConfig(float(split_raw.get("train_fraction", 0.7))),
                surface=str(raw.get("surface", "test")),
                seed=int(raw.get("seed", 0)),
                hyper=Hyper(**raw.get("model", {})),
                name=str(raw.get("name", "")),
                jobs=int(raw.get("jobs", 1)),
                save_predictions=bool(raw.get("save_predictions", False)),
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid config value: {exc}") from exc

    def to_dict(self) -> dict:
        return {
            "name": self.task_name,
            "dataset": self.dataset,
            "task": list(self.task),
            "methods": [m.to_dict() for m in self.methods],
            "runs": self.runs,
            "split": {"train_fraction": self.split.train_fraction},
            "surface": self.surface,
            "seed": self.seed,
            "model": {
                "learning_rate": self.hyper.learning_rate,
                "epochs": self.hyper.epochs,
                "l2": self.hyper.l2,
            },
        }


def load_config(path, **overrides) -> ExperimentConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    cfg = ExperimentConfig.from_dict(raw, path.parent)
    overrides = {k: v for k, v in overrides.items() if v is not None}
    return replace(cfg, **overrides) if overrides else cfg


def derive_seed(seed: int, run: int, tag: str = "") -> int:
    """64-bit seed for (experiment seed, run index, purpose tag)."""
    ss = np.random.SeedSequence([int(seed) & (2**64 - 1), int(run), zlib.crc32(tag.encode())])
    lo, hi = ss.generate_state(2, dtype=np.uint32)
    return int(hi) << 32 | int(lo)


def load_task_dataset(cfg: ExperimentConfig) -> Dataset:
    schema = load_schema(cfg.schema).restrict(cfg.task)
    path = recipe_paths(cfg.dataset.split(":", 1)[1])[0] if cfg.dataset.startswith("recipe:") else cfg.dataset
    return load_dataset(path, schema)


def split_fingerprint(surface: str, train: Dataset, test: Dataset) -> str:
    h = hashlib.sha256(surface.encode())
    h.update(np.asarray(train.row_ids, dtype=np.int64).tobytes())
    h.update(b"|")
    h.update(np.asarray(test.row_ids, dtype=np.int64).tobytes())
    return h.hexdigest()[:16]


def _method_predictions(spec, ctx) -> PredictionSet:
    cfg, r = ctx["cfg"], ctx["run"]
    train, evald, groups, enc = ctx["train"], ctx["eval"], ctx["groups"], ctx["encoder"]
    seed = derive_seed(cfg.seed, r, spec.id)
    if spec.kind == "reweighing":
        weights = mt.reweigh(train, groups)
        ctx["flags"].extend(weights.flags)
        model = fit_logistic(ctx["X_train"], train.labels, weights.values, cfg.hyper, seed, enc.fingerprint())
        prob = predict_proba(model, ctx["X_eval"])
        return PredictionSet(evald.labels, apply_threshold(prob), prob, ctx["eval_keys"], r)
    if spec.kind == "eop":
        _, val_idx = split_indices(train.N, SplitConfig(1.0 - mt.VALIDATION_FRACTION, seed))
        val_prob = ctx["base_train_prob"][val_idx]
        val = PredictionSet(
            train.labels[val_idx], apply_threshold(val_prob), val_prob, ctx["train_keys"][val_idx], r
        )
        pol = mt.eop_fit(val, groups)
        ctx["flags"].extend(pol.flags)
        return mt.eop_apply(pol, ctx["preds"][BASE], groups)
    if spec.kind == "naivebase":
        model, pol = mt.naivebase_fit(train, groups, enc, cfg.hyper, seed)
        return mt.naivebase_apply(model, pol, evald, groups, enc, r)
    if spec.kind == "counterfactual_ensemble":
        ens = mt.counterfactual_ensemble_fit(train, groups, enc, cfg.hyper, seed)
        ctx["flags"].extend(ens.flags)
        return mt.counterfactual_ensemble_predict(ens, evald, groups, r)
    if spec.kind == "selective":
        of = spec.params["of"]
        if ctx["preds"].get(of) is None:
            raise RuntimeError(f"method {of!r} failed in this run")
        scope = mt.SelectiveScope(tuple(spec.params["scope"]))
        return mt.selective_apply(ctx["preds"][BASE], ctx["preds"][of], groups, scope)
    if spec.kind == "scores":
        from fairaudit.scores import load_scores

        sets, _ = load_scores(spec.params["path"], load_schema(cfg.schema).restrict(cfg.task))
        match = [s for s in sets if s.run_id == r]
        if not match:
            raise RuntimeError(f"score file has no run_id {r}")
        ps = match[0]
        if not (np.array_equal(ps.y_true, evald.labels) and np.array_equal(ps.group_of, ctx["eval_keys"])):
            raise RuntimeError("score file rows do not match this run's evaluation split")
        return PredictionSet(ps.y_true, ps.y_pred, ps.y_prob, ctx["eval_keys"], r)
    raise ConfigError(f"unknown method kind {spec.kind!r}")


def run_single(cfg: ExperimentConfig, dataset: Dataset, r: int) -> tuple[dict, dict]:
    """One repetition: shared split, baseline, every method.

    Returns the serializable run record and the prediction sets by method.
    """
    run_seed = derive_seed(cfg.seed, r)
    train, test = split(dataset, replace(cfg.split, seed=run_seed))
    groups = assign_groups(train, dataset)
    enc = FeatureEncoder.fit(train)
    evald = train if cfg.surface == "train" else test
    X_train = enc.transform(train)
    X_eval = X_train if cfg.surface == "train" else enc.transform(evald)
    ctx = {
        "cfg": cfg,
        "run": r,
        "train": train,
        "eval": evald,
        "groups": groups,
        "encoder": enc,
        "X_train": X_train,
        "X_eval": X_eval,
        "train_keys": groups.keys_for(train),
        "eval_keys": groups.keys_for(evald),
        "preds": {},
        "flags": [],
    }
    base = fit_logistic(X_train, train.labels, None, cfg.hyper, run_seed, enc.fingerprint())
    ctx["flags"].extend(base.flags)
    ctx["base_train_prob"] = predict_proba(base, X_train)
    base_prob = ctx["base_train_prob"] if cfg.surface == "train" else predict_proba(base, X_eval)
    ctx["preds"][BASE] = PredictionSet(evald.labels, apply_threshold(base_prob), base_prob, ctx["eval_keys"], r)

    failures = {}
    for spec in cfg.methods:
        try:
            ctx["preds"][spec.id] = _method_predictions(spec, ctx)
        except (FairAuditError, ValueError, RuntimeError, ArithmeticError) as exc:
            log.warning("run %d: method %s failed: %s", r, spec.id, exc)
            ctx["preds"][spec.id] = None
            failures[spec.id] = f"{type(exc).__name__}: {exc}"

    surface_flag = ["surface:train"] if cfg.surface == "train" else []
    reports = {}
    for mid, ps in ctx["preds"].items():
        if ps is None:
            reports[mid] = None
            continue
        rep = evaluate(ps, groups).to_dict()
        rep["flags"] = surface_flag + rep["flags"]
        reports[mid] = rep
    record = {
        "run": r,
        "seed": run_seed,
        "split": split_fingerprint(cfg.surface, train, test),
        "n_train": train.N,
        "n_eval": evald.N,
        "groups": groups.to_dict(),
        "flags": sorted(set(ctx["flags"])),
        "failures": failures,
        "reports": reports,
    }
    return record, {"predictions": ctx["preds"], "groups": groups}


def _run_record(args):
    cfg, dataset, r = args
    record, extra = run_single(cfg, dataset, r)
    if not cfg.save_predictions:
        extra = None
    return record, extra


@dataclass
class RunResults:
    task: dict
    config: dict
    methods: list
    runs: list
    predictions: list | None = field(default=None, repr=False, compare=False)

    @property
    def name(self) -> str:
        return self.task["name"]

    @property
    def roles(self) -> list[str]:
        for run in self.runs:
            return list(run["groups"]["groups"])
        return []

    @property
    def single_attribute(self) -> bool:
        return len(self.task.get("attributes", [])) == 1

    def values(self, method: str, metric: str) -> list[float]:
        """Metric values over runs where the method succeeded and the metric is defined."""
        out = []
        for run in self.runs:
            rep = run["reports"].get(method)
            if rep is not None and rep.get(metric) is not None:
                out.append(rep[metric])
        return out

    def reports(self, method: str) -> list[dict | None]:
        return [run["reports"].get(method) for run in self.runs]

    def fingerprints(self) -> list[str]:
        return [run["split"] for run in self.runs]

    def flags(self) -> list[str]:
        out = []
        for run in self.runs:
            for mid, msg in sorted(run["failures"].items()):
                out.append(f"run {run['run']}: {mid} failed ({msg})")
        return out

    def to_dict(self) -> dict:
        return {
            "format": RESULTS_FORMAT,
            "task": self.task,
            "config": self.config,
            "methods": self.methods,
            "runs": self.runs,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def save(self, out_dir) -> Path:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / "results.json"
        path.write_text(self.to_json(), encoding="utf-8")
        if self.predictions:
            from fairaudit.scores import write_scores

            pred_dir = out_dir / "predictions"
            pred_dir.mkdir(exist_ok=True)
            for mid in self.methods:
                sets = [(p["predictions"][mid], p["groups"]) for p in self.predictions if p["predictions"][mid]]
                write_scores(sets, pred_dir / f"{mid}.csv")
        return path

    @classmethod
    def from_dict(cls, raw: dict) -> "RunResults":
        if raw.get("format") != RESULTS_FORMAT:
            raise ConfigError(f"not a results file (format={raw.get('format')!r})")
        return cls(raw["task"], raw["config"], raw["methods"], raw["runs"])

    @classmethod
    def load(cls, path) -> "RunResults":
        path = Path(path)
        if path.is_dir():
            path = path / "results.json"
        try:
            return cls.from_dict(json.loads(path.read_text(encoding="utf-8")))
        except FileNotFoundError:
            raise ConfigError(f"no results at {path}") from None


def run_experiment(cfg: ExperimentConfig, dataset: Dataset | None = None, jobs: int | None = None) -> RunResults:
    """All ``cfg.runs`` repetitions; output order is by run index regardless of ``jobs``."""
    dataset = dataset if dataset is not None else load_task_dataset(cfg)
    jobs = cfg.jobs if jobs is None else jobs
    args = [(cfg, dataset, r) for r in range(cfg.runs)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outputs = list(pool.map(_run_record, args))
    else:
        outputs = [_run_record(a) for a in args]
    outputs.sort(key=lambda o: o[0]["run"])
    task = {
        "name": cfg.task_name,
        "dataset": dataset.name,
        "attributes": list(cfg.task),
        "model": "lr",
        "surface": cfg.surface,
    }
    return RunResults(
        task=task,
        config=cfg.to_dict(),
        methods=[BASE] + [m.id for m in cfg.methods],
        runs=[o[0] for o in outputs],
        predictions=[o[1] for o in outputs] if cfg.save_predictions else None,
    )
