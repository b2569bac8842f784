"""Command line front end: placement runs, training, simulation, benchmarks.

Every command honors --seed and writes CSV output whose body is a pure
function of the inputs; wall-clock readings and timestamps live only in
'#'-prefixed metadata header lines so repeated runs stay byte-identical
below them.

Exit codes: 0 success, 1 usage or configuration error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import statistics
import sys
import threading
import time
from collections.abc import Callable, Iterable, Mapping, Sequence

import numpy as np

from .distributed import (
    ENDPOINT_ENV_VAR,
    Learner,
    SyncConfig,
    WorkerReport,
    centralized_mode,
    parse_endpoint,
    worker_loop,
)
from .dqn import DqnConfig
from .model import AppDag, Node, dag_from_json, load_instance
from .network import forward, load_policy, save_policy
from .placement import (
    InstanceTooLarge,
    PlacementParams,
    PlacementResult,
    fa_run,
    fitness,
    ga_run,
    madcp_run,
    pso_run,
    random_instance,
    random_placement,
    brute_force_optimal,
)
from .sim import (
    ClusterSpec,
    LinkSpec,
    USER,
    baseline_greedy,
    baseline_round_robin,
    generate_workload,
    load_cluster,
    make_reward_spec,
    poisson_releases,
    run_episode,
)


class CliError(Exception):
    """Bad invocation or configuration; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; the contract reserves 2 for runtime
    # failures, so route them to 1 instead.
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# configuration


class Config:
    """Flat JSON config with dotted module.param keys; CLI flags win."""

    def __init__(self, values: dict[str, object] | None = None) -> None:
        self.values = dict(values or {})

    @classmethod
    def load(cls, path: str) -> "Config":
        try:
            with open(path) as fh:
                doc = json.load(fh)
        except OSError as exc:
            raise CliError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise CliError(f"config {path} is not valid JSON: {exc}") from exc
        if not isinstance(doc, dict):
            raise CliError(f"config {path} must hold a JSON object")
        for key in doc:
            if not isinstance(key, str) or "." not in key:
                raise CliError(f"config key {key!r} is not of the form module.param")
        return cls(doc)

    def get(self, key: str, default: object = None) -> object:
        return self.values.get(key, default)

    def get_int(self, key: str, default: int | None = None) -> int | None:
        v = self.values.get(key, default)
        if v is None:
            return None
        try:
            if isinstance(v, float) and v != int(v):
                raise ValueError
            return int(v)
        except (TypeError, ValueError):
            raise CliError(f"config key {key} must be an integer, got {v!r}") from None

    def get_float(self, key: str, default: float | None = None) -> float | None:
        v = self.values.get(key, default)
        if v is None:
            return None
        try:
            return float(v)
        except (TypeError, ValueError):
            raise CliError(f"config key {key} must be a number, got {v!r}") from None

    def get_str(self, key: str, default: str | None = None) -> str | None:
        v = self.values.get(key, default)
        if v is None:
            return None
        if not isinstance(v, str):
            raise CliError(f"config key {key} must be a string, got {v!r}")
        return v


# ---------------------------------------------------------------------------
# CSV output


def _fmt_cell(v: object) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(path: str, header: Sequence[str], rows: Iterable[Sequence[object]],
              meta: Mapping[str, object]) -> None:
    """Header row is mandatory; metadata rides above it as '# key=value'."""
    with open(path, "w", newline="") as fh:
        for key, value in meta.items():
            fh.write(f"# {key}={value}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt_cell(v) for v in row])


def _meta(command: str, seed: int, **extra: object) -> dict[str, object]:
    base: dict[str, object] = {
        "command": command,
        "seed": seed,
        "created": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
    }
    base.update(extra)
    return base


# ---------------------------------------------------------------------------
# cluster / workload resolution


def _default_cluster() -> ClusterSpec:
    """Three heterogeneous nodes: fast-lean, mid, slow-hungry."""
    nodes = (
        Node(0, compute_cap=2000.0, mem_avail=2048.0, power_draw=20.0),
        Node(1, compute_cap=1000.0, mem_avail=1024.0, power_draw=60.0),
        Node(2, compute_cap=400.0, mem_avail=512.0, power_draw=140.0),
    )
    ids = [n.id for n in nodes] + [USER]
    links = {}
    for a in ids:
        for b in ids:
            if a != b:
                links[(a, b)] = LinkSpec(latency_s=0.01, bandwidth_mbps=100.0)
    return ClusterSpec(nodes, links)


def _resolve_cluster(cfg: Config) -> ClusterSpec:
    path = cfg.get_str("sim.cluster")
    if path is None:
        return _default_cluster()
    if not os.path.exists(path):
        raise CliError(f"cluster file not found: {path}")
    return load_cluster(path)


def _load_workload(path: str) -> tuple[list[AppDag], dict[int, float] | None]:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise CliError(f"cannot read workload {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise CliError(f"workload {path} is not valid JSON: {exc}") from exc
    try:
        apps = [dag_from_json(d) for d in doc["apps"]]
        releases = doc.get("releases")
        if releases is not None:
            releases = {int(k): float(v) for k, v in releases.items()}
    except (KeyError, TypeError, ValueError) as exc:
        raise CliError(f"workload {path} is malformed: {exc}") from exc
    return apps, releases


def _resolve_workload(cfg: Config, seed: int) -> tuple[list[AppDag], dict[int, float] | None]:
    path = cfg.get_str("sim.workload")
    if path is not None:
        if not os.path.exists(path):
            raise CliError(f"workload file not found: {path}")
        return _load_workload(path)
    apps = cfg.get_int("sim.apps", 4)
    tasks = cfg.get_int("sim.tasks_per_app", 5)
    density = cfg.get_float("sim.density", 0.5)
    layers = cfg.get_int("sim.layers")
    if apps < 1 or tasks < 1:
        raise CliError("sim.apps and sim.tasks_per_app must be positive")
    workload = generate_workload(apps, tasks, rng=np.random.default_rng([seed, 101]),
                                 layers=layers, density=density)
    rate = cfg.get_float("sim.arrival_rate")
    releases = None
    if rate is not None:
        releases = poisson_releases(workload, rate, np.random.default_rng([seed, 102]))
    return workload, releases


def _dqn_config(cfg: Config) -> DqnConfig:
    kwargs: dict[str, object] = {}
    hidden = cfg.get("dqn.hidden_sizes")
    if hidden is not None:
        if not isinstance(hidden, list) or not all(isinstance(h, int) for h in hidden):
            raise CliError("dqn.hidden_sizes must be a JSON list of integers")
        kwargs["hidden_sizes"] = tuple(hidden)
    for name in ("learning_rate", "discount", "eps_start", "eps_end"):
        v = cfg.get_float(f"dqn.{name}")
        if v is not None:
            kwargs[name] = v
    for name in ("eps_decay_steps", "buffer_capacity", "batch_size",
                 "target_sync_interval"):
        v = cfg.get_int(f"dqn.{name}")
        if v is not None:
            kwargs[name] = v
    for name in ("activation", "optimizer"):
        v = cfg.get_str(f"dqn.{name}")
        if v is not None:
            kwargs[name] = v
    try:
        return DqnConfig(**kwargs)
    except ValueError as exc:
        raise CliError(str(exc)) from exc


def _sync_config(cfg: Config) -> SyncConfig:
    kwargs: dict[str, int] = {}
    for name in ("sync_interval", "batch_flush"):
        v = cfg.get_int(f"sync.{name}")
        if v is not None:
            kwargs[name] = v
    try:
        return SyncConfig(**kwargs)
    except ValueError as exc:
        raise CliError(str(exc)) from exc


def _reward_settings(cfg: Config) -> dict[str, object]:
    metric = cfg.get_str("train.metric", "weighted_cost")
    if metric not in ("weighted_cost", "response_time", "energy"):
        raise CliError(f"unknown train.metric {metric!r}")
    return {
        "metric": metric,
        "failure_penalty": cfg.get_float("train.failure_penalty", -2.0),
        "w1": cfg.get_float("train.w1", 0.5),
        "w2": cfg.get_float("train.w2", 0.5),
    }


# ---------------------------------------------------------------------------
# place


_SEARCH_RUNNERS: dict[str, Callable[..., PlacementResult]] = {
    "madcp": madcp_run,
    "ga": ga_run,
    "fa": fa_run,
    "pso": pso_run,
}
_PARAM_INT_FIELDS = ("population_size", "generations", "num_operations")
_PARAM_FLOAT_FIELDS = ("crossover_rate", "mutation_rate", "fa_alpha", "fa_beta",
                       "fa_gamma", "pso_w", "pso_c1", "pso_c2", "penalty_lambda")


def _params_for(alg: str, cfg: Config) -> PlacementParams | None:
    if alg == "random":
        return None
    base: PlacementParams = getattr(PlacementParams, alg)()
    overrides: dict[str, object] = {}
    for name in _PARAM_INT_FIELDS:
        v = cfg.get_int(f"{alg}.{name}")
        if v is not None:
            overrides[name] = v
    for name in _PARAM_FLOAT_FIELDS:
        v = cfg.get_float(f"{alg}.{name}")
        if v is not None:
            overrides[name] = v
    try:
        return dataclasses.replace(base, **overrides) if overrides else base
    except ValueError as exc:
        raise CliError(str(exc)) from exc


def _resolve_instance(cfg: Config, rng: np.random.Generator):
    path = cfg.get_str("place.instance")
    if path is not None:
        if not os.path.exists(path):
            raise CliError(f"instance file not found: {path}")
        return load_instance(path)
    m = cfg.get_int("place.m", 6)
    n = cfg.get_int("place.n", 4)
    if m < 1 or n < 1:
        raise CliError("place.m and place.n must be positive")
    return random_instance(m, n, rng=rng, slack=cfg.get_float("place.slack", 2.0))


def _trace_rows(result: PlacementResult, timing: bool) -> list[tuple]:
    return [
        (r.generation, r.best_fitness, r.best_F, r.feasible,
         r.elapsed_ms if timing else 0.0)
        for r in result.trace.rows
    ]


def cmd_place(args: argparse.Namespace, cfg: Config) -> int:
    raw = args.algorithms or cfg.get_str("place.algorithms", "madcp,ga,fa,pso")
    algorithms = [a.strip() for a in raw.split(",") if a.strip()]
    known = set(_SEARCH_RUNNERS) | {"random"}
    for alg in algorithms:
        if alg not in known:
            raise CliError(f"unknown algorithm {alg!r}; pick from {sorted(known)}")
    if not algorithms:
        raise CliError("no algorithms selected")

    fixed = None
    if cfg.get_str("place.instance") is not None:
        fixed = _resolve_instance(cfg, np.random.default_rng(args.seed))

    header = ("generation", "best_fitness", "best_F", "feasible", "elapsed_ms")
    summary_rows: list[tuple] = []
    wall_meta: dict[str, object] = {}
    for alg in algorithms:
        params = _params_for(alg, cfg)
        finals: list[float] = []
        feasible_count = 0
        t0 = time.perf_counter()
        for rep in range(args.reps):
            inst = fixed if fixed is not None else _resolve_instance(
                cfg, np.random.default_rng([args.seed, rep]))
            rng = np.random.default_rng([args.seed, rep, sorted(known).index(alg)])
            if alg == "random":
                result = random_placement(inst, rng)
            else:
                result = _SEARCH_RUNNERS[alg](inst, params, rng)
            trace_path = os.path.join(args.out, f"place_{alg}_rep{rep:02d}.csv")
            write_csv(trace_path, header, _trace_rows(result, args.timing),
                      _meta("place", args.seed, algorithm=alg, rep=rep))
            finals.append(result.objective_value)
            feasible_count += int(result.feasible)
        wall_meta[f"wall_s_{alg}"] = f"{time.perf_counter() - t0:.3f}"
        mean_f = statistics.fmean(finals)
        stdev_f = statistics.stdev(finals) if len(finals) > 1 else 0.0
        summary_rows.append((alg, args.reps, mean_f, stdev_f,
                             feasible_count / args.reps))
        print(f"place {alg}: mean best F {mean_f:.6f} "
              f"(feasible {feasible_count}/{args.reps})")

    summary_path = os.path.join(args.out, "place_summary.csv")
    write_csv(summary_path,
              ("algorithm", "reps", "mean_best_F", "stdev_best_F", "feasible_rate"),
              summary_rows, _meta("place", args.seed, **wall_meta))
    print(f"wrote {summary_path}")
    return 0


# ---------------------------------------------------------------------------
# train / train-dist


def cmd_train(args: argparse.Namespace, cfg: Config) -> int:
    cluster = _resolve_cluster(cfg)
    workload, releases = _resolve_workload(cfg, args.seed)
    episodes = cfg.get_int("train.episodes", 30) if args.episodes is None else args.episodes
    if episodes < 0:
        raise CliError("episodes must be non-negative")
    dqn_cfg = _dqn_config(cfg)
    sync = _sync_config(cfg)
    spec = make_reward_spec(cluster, workload, releases=releases,
                            **_reward_settings(cfg))

    t0 = time.perf_counter()
    result = centralized_mode(cluster, workload, episodes, dqn_cfg=dqn_cfg,
                              sync=sync, reward_spec=spec, releases=releases,
                              seed=args.seed)
    wall = time.perf_counter() - t0

    rewards_path = os.path.join(args.out, "rewards.csv")
    write_csv(rewards_path,
              ("episode", "steps", "total_reward", "total_wc", "epsilon", "updates"),
              [(r.episode, r.steps, r.total_reward, r.total_wc, r.epsilon, r.updates)
               for r in result.trace],
              _meta("train", args.seed, episodes=episodes, wall_s=f"{wall:.3f}"))

    policy_path = os.path.join(args.out, "policy.json")
    save_policy(result.policy, policy_path,
                metadata={"episodes": episodes, "updates": result.updates,
                          "state_dim": 3 * cluster.n + 4, "n_actions": cluster.n})
    if result.trace:
        print(f"train: {episodes} episodes, {result.updates} updates, "
              f"final wc {result.trace[-1].total_wc:.4f}")
    else:
        print(f"train: {episodes} episodes, policy left at initialization")
    print(f"wrote {rewards_path}")
    print(f"wrote {policy_path}")
    return 0


def _listen_endpoint(args: argparse.Namespace) -> tuple[str, int]:
    if args.listen is not None:
        return parse_endpoint(args.listen)
    env = os.environ.get(ENDPOINT_ENV_VAR)
    if env is not None:
        return parse_endpoint(env)
    return "127.0.0.1", 0


def cmd_train_dist(args: argparse.Namespace, cfg: Config) -> int:
    cluster = _resolve_cluster(cfg)
    workload, releases = _resolve_workload(cfg, args.seed)
    episodes = cfg.get_int("train.episodes", 30) if args.episodes is None else args.episodes
    if episodes < 0:
        raise CliError("episodes must be non-negative")
    dqn_cfg = _dqn_config(cfg)
    sync = _sync_config(cfg)
    spec = make_reward_spec(cluster, workload, releases=releases,
                            **_reward_settings(cfg))
    max_updates = cfg.get_int("dist.max_updates")
    try:
        host, port = _listen_endpoint(args)
    except ValueError as exc:
        raise CliError(str(exc)) from exc

    state_dim, n_actions = 3 * cluster.n + 4, cluster.n
    t0 = time.perf_counter()
    learner = Learner(state_dim, n_actions, cfg=dqn_cfg, sync=sync,
                      seed=args.seed, host=host, port=port,
                      max_updates=max_updates,
                      expected_workers=args.workers).start()
    reports: dict[str, WorkerReport] = {}

    def run(worker_id: str, index: int) -> None:
        reports[worker_id] = worker_loop(
            learner.address, worker_id, cluster, workload, episodes,
            sync=sync, dqn_cfg=dqn_cfg, reward_spec=spec, releases=releases,
            rng=np.random.default_rng([args.seed, 7, index]))

    threads = [threading.Thread(target=run, args=(f"w{i:02d}", i))
               for i in range(args.workers)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    if not learner.join(timeout=60.0):
        learner.stop()
        learner.join(timeout=10.0)
        raise RuntimeError("learner did not drain within 60s of worker exit")
    wall = time.perf_counter() - t0

    sent = sum(r.experiences_sent for r in reports.values())
    if learner.received_experiences != sent:
        raise RuntimeError(
            f"experience loss: workers sent {sent}, "
            f"learner received {learner.received_experiences}")

    dist_path = os.path.join(args.out, "train_dist.csv")
    write_csv(dist_path,
              ("worker_id", "episodes", "batches_sent", "experiences_sent"),
              [(wid, r.episodes_run, r.batches_sent, r.experiences_sent)
               for wid, r in sorted(reports.items())],
              _meta("train-dist", args.seed, workers=args.workers,
                    updates=learner.updates,
                    policy_version=learner.policy_version,
                    received=learner.received_experiences,
                    wall_s=f"{wall:.3f}"))

    policy_path = os.path.join(args.out, "policy.json")
    save_policy(learner.agent.online, policy_path,
                metadata={"workers": args.workers, "updates": learner.updates,
                          "state_dim": state_dim, "n_actions": n_actions})
    print(f"train-dist: {args.workers} workers, {sent} experiences, "
          f"{learner.updates} updates, policy version {learner.policy_version}")
    print(f"wrote {dist_path}")
    print(f"wrote {policy_path}")
    return 0


# ---------------------------------------------------------------------------
# simulate


def _policy_from_file(path: str, cluster: ClusterSpec) -> Callable[[np.ndarray], int]:
    if not os.path.exists(path):
        raise CliError(f"policy file not found: {path}")
    try:
        params, _ = load_policy(path)
    except Exception as exc:
        raise CliError(f"cannot load policy {path}: {exc}") from exc
    state_dim, n_actions = 3 * cluster.n + 4, cluster.n
    if params.layer_sizes[0] != state_dim or params.layer_sizes[-1] != n_actions:
        raise CliError(
            f"policy shape {params.layer_sizes} does not fit a {cluster.n}-node "
            f"cluster (needs {state_dim} inputs, {n_actions} outputs)")

    def act(state: np.ndarray) -> int:
        q = forward(params, np.asarray(state, dtype=float))
        return int(np.argmax(q))

    return act


def cmd_simulate(args: argparse.Namespace, cfg: Config) -> int:
    cluster = _resolve_cluster(cfg)
    workload, releases = _resolve_workload(cfg, args.seed)
    spec = make_reward_spec(cluster, workload, releases=releases,
                            **_reward_settings(cfg))

    baseline = args.baseline or cfg.get_str("simulate.baseline")
    policy_path = args.policy or cfg.get_str("simulate.policy")
    if policy_path is not None and baseline is not None:
        raise CliError("give either a policy file or a baseline, not both")

    t0 = time.perf_counter()
    if policy_path is not None:
        source = f"policy:{os.path.basename(policy_path)}"
        result = run_episode(cluster, workload, _policy_from_file(policy_path, cluster),
                             reward_spec=spec, releases=releases)
    else:
        name = baseline or "round_robin"
        source = f"baseline:{name}"
        if name == "round_robin":
            result = baseline_round_robin(cluster, workload, spec, releases)
        elif name == "greedy":
            result = baseline_greedy(cluster, workload, spec, releases)
        elif name == "random":
            rng = np.random.default_rng(args.seed)
            result = run_episode(cluster, workload,
                                 lambda s: int(rng.integers(cluster.n)),
                                 reward_spec=spec, releases=releases)
        else:
            raise CliError(f"unknown baseline {name!r}; pick from "
                           "['greedy', 'random', 'round_robin']")
    wall = time.perf_counter() - t0

    schedule_rows = []
    for dag, config in zip(workload, result.configs):
        for task_id in sorted(config.entries):
            run = config.entries[task_id]
            schedule_rows.append((dag.id, task_id, run.node, run.start_s,
                                  run.finish_s, run.energy_j, run.success))
    schedule_path = os.path.join(args.out, "schedule.csv")
    write_csv(schedule_path,
              ("app_id", "task_id", "node", "start_s", "finish_s",
               "energy_j", "success"),
              schedule_rows,
              _meta("simulate", args.seed, source=source, wall_s=f"{wall:.3f}"))

    failures = sum(1 for _, cfg_ in zip(workload, result.configs)
                   for run in cfg_.entries.values() if not run.success)
    metrics_path = os.path.join(args.out, "metrics.csv")
    write_csv(metrics_path,
              ("response_time_s", "energy_j", "weighted_cost",
               "total_reward", "failures"),
              [(result.total_rt, result.total_ec, result.total_wc,
                sum(result.rewards), failures)],
              _meta("simulate", args.seed, source=source, wall_s=f"{wall:.3f}"))

    print(f"simulate {source}: rt {result.total_rt:.4f}s, "
          f"energy {result.total_ec:.2f}J, wc {result.total_wc:.4f}, "
          f"failures {failures}")
    print(f"wrote {schedule_path}")
    print(f"wrote {metrics_path}")
    return 0


# ---------------------------------------------------------------------------
# oracle


def cmd_oracle(args: argparse.Namespace, cfg: Config) -> int:
    inst = _resolve_instance(cfg, np.random.default_rng([args.seed, 0]))
    t0 = time.perf_counter()
    try:
        assignment, best_f = brute_force_optimal(inst)
    except InstanceTooLarge as exc:
        raise CliError(str(exc)) from exc
    wall = time.perf_counter() - t0

    fit = fitness(assignment, inst)
    doc = {
        "m": inst.num_components,
        "n": inst.num_nodes,
        "assignment": list(assignment.node_of),
        "objective_value": best_f,
        "fitness": fit,
    }
    oracle_path = os.path.join(args.out, "oracle.json")
    with open(oracle_path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
    print(f"oracle: F {best_f:.6f}, assignment {list(assignment.node_of)} "
          f"({wall:.2f}s)")
    print(f"wrote {oracle_path}")
    return 0


# ---------------------------------------------------------------------------
# bench


def cmd_bench(args: argparse.Namespace, cfg: Config) -> int:
    raw = cfg.get_str("bench.populations", "25,50,100,200")
    try:
        populations = [int(p) for p in raw.split(",") if p.strip()]
    except ValueError:
        raise CliError(f"bench.populations must be comma-separated ints, got {raw!r}")
    if not populations:
        raise CliError("bench.populations is empty")
    generations = cfg.get_int("bench.generations", 20)
    m = cfg.get_int("bench.m", 30)
    n = cfg.get_int("bench.n", 10)
    inst = random_instance(m, n, rng=np.random.default_rng([args.seed, 0]))

    rows = []
    medians: dict[int, float] = {}
    for pop in populations:
        params = PlacementParams.madcp(population_size=pop, generations=generations)
        result = madcp_run(inst, params, rng=np.random.default_rng([args.seed, 1, pop]))
        med = statistics.median(result.trace.generation_times_ms())
        medians[pop] = med
        rows.append((pop, generations, m, n, result.objective_value,
                     result.feasible))
        print(f"bench P={pop}: median generation {med:.3f} ms, "
              f"best F {result.objective_value:.4f}")

    meta = _meta("bench", args.seed, m=m, n=n, generations=generations)
    for pop in populations:
        meta[f"median_gen_ms_p{pop}"] = f"{medians[pop]:.4f}"
    for pop in populations:
        if pop * 2 in medians and medians[pop] > 0:
            ratio = medians[pop * 2] / medians[pop]
            meta[f"doubling_ratio_p{pop}_p{pop * 2}"] = f"{ratio:.3f}"
            print(f"bench doubling P={pop}->{pop * 2}: ratio {ratio:.2f}")

    bench_path = os.path.join(args.out, "bench.csv")
    write_csv(bench_path,
              ("population", "generations", "m", "n", "best_F", "feasible"),
              rows, meta)
    print(f"wrote {bench_path}")
    return 0


# ---------------------------------------------------------------------------
# parser / entry point


def _seed_value(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}")
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit int")
    return v


def _worker_count(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"workers must be an integer, got {text!r}")
    if not 1 <= v <= 30:
        raise argparse.ArgumentTypeError("workers must lie in [1, 30]")
    return v


def build_parser() -> _Parser:
    common = _Parser(add_help=False)
    common.add_argument("--config", metavar="PATH", default=None,
                        help="flat JSON config with module.param keys")
    common.add_argument("--seed", type=_seed_value, default=0,
                        help="master seed (default 0)")
    common.add_argument("--out", metavar="DIR", default="out",
                        help="output directory (default ./out)")
    common.add_argument("--reps", type=int, default=10,
                        help="seeded repetitions where applicable (default 10)")

    parser = _Parser(prog="reinfog",
                     description="placement search, scheduler training, and "
                                 "simulation experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("place", parents=[common],
                       help="run placement searches over seeded repetitions")
    p.add_argument("--algorithms", default=None,
                   help="comma list from madcp,ga,fa,pso,random")
    p.add_argument("--timing", action="store_true",
                   help="record real per-generation wall times in trace CSVs")
    p.set_defaults(func=cmd_place)

    p = sub.add_parser("train", parents=[common],
                       help="train a scheduling policy in a single process")
    p.add_argument("--episodes", type=int, default=None,
                   help="override train.episodes")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("train-dist", parents=[common],
                       help="train with local workers streaming to a learner")
    p.add_argument("--episodes", type=int, default=None,
                   help="override train.episodes (per worker)")
    p.add_argument("--workers", type=_worker_count, default=2,
                   help="local worker count, 1..30 (default 2)")
    p.add_argument("--listen", default=None,
                   help=f"learner bind address host:port "
                        f"(default {ENDPOINT_ENV_VAR} or 127.0.0.1:0)")
    p.set_defaults(func=cmd_train_dist)

    p = sub.add_parser("simulate", parents=[common],
                       help="run one workload under a policy or baseline")
    p.add_argument("--policy", metavar="PATH", default=None,
                   help="saved policy JSON to drive scheduling")
    p.add_argument("--baseline", default=None,
                   help="round_robin, greedy, or random (default round_robin)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("oracle", parents=[common],
                       help="exhaustive optimal placement for small instances")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("bench", parents=[common],
                       help="time search generations across population sizes")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = Config.load(args.config) if args.config is not None else Config()
        if args.reps < 1:
            raise CliError("--reps must be at least 1")
        os.makedirs(args.out, exist_ok=True)
        return args.func(args, cfg)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # anything past argument/config checks is runtime
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
