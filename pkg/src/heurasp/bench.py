"""Grid pathfinding instances, shipped encodings and a subprocess benchmark runner.

Run ``python -m heurasp.bench --widths 5 10 --seeds 1 2 --out results.csv``.
"""

from __future__ import annotations

import argparse
import csv
import heapq
import math
import os
import random
import re
import subprocess
import sys
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources

__all__ = [
    "PathfindingInstance", "BenchRow", "SMALL_GRID", "NO_PATH", "CSV_COLUMNS", "CONFIGS",
    "gen_pathfinding", "ship_encodings", "encoding_path", "reference_astar", "run_benchmark",
    "write_csv",
]

NO_PATH = "NO_PATH"
CSV_COLUMNS = ["instance", "width", "seed", "config", "status", "time_s", "guesses", "conflicts", "ground_rules"]
CONFIGS = {"heur": [], "no-heur": ["--no-heuristics"]}
SHIPPED = ("astar.lp", "pathfinding.lp", "pathfinding_ondemand.lp")


@dataclass(frozen=True)
class PathfindingInstance:
    xmax: int
    ymax: int
    start: tuple
    goal: tuple
    obstacles: frozenset = frozenset()
    xmin: int = 0
    ymin: int = 0
    width: int | None = None
    seed: int | None = None

    @property
    def name(self) -> str:
        if self.width is None:
            return f"grid_{self.xmax + 1}x{self.ymax + 1}"
        return f"w{self.width}_s{self.seed}"

    def facts(self) -> str:
        lines = [f"xmin({self.xmin}). xmax({self.xmax}). ymin({self.ymin}). ymax({self.ymax}).",
                 f"start({self.start[0]},{self.start[1]}). goal({self.goal[0]},{self.goal[1]})."]
        lines += [f"obstacle({x},{y})." for x, y in sorted(self.obstacles)]
        return "\n".join(lines) + "\n"


SMALL_GRID = PathfindingInstance(xmax=5, ymax=4, start=(4, 2), goal=(1, 3), obstacles=frozenset({(3, 3), (2, 1)}))


def gen_pathfinding(w: int, seed, rng: random.Random | None = None) -> PathfindingInstance:
    """Square grid with random obstacles and two vertical walls.

    Start is (0,0), goal is (w-1,w-1). Every other square is an obstacle with
    probability 0.2. One wall hangs from the top row and one rises from the
    bottom row, each at a random column in [1, w-2] with a random length in
    [ceil(w/2), w-2] (just ceil(w/2) when that range is empty).
    """
    if w < 3:
        raise ValueError(f"width must be at least 3, got {w}")
    rng = rng or random.Random(seed)
    start, goal = (0, 0), (w - 1, w - 1)
    obstacles = set()
    for y in range(w):
        for x in range(w):
            if (x, y) not in (start, goal) and rng.random() < 0.2:
                obstacles.add((x, y))
    lo = math.ceil(w / 2)
    hi = max(lo, w - 2)
    top_x, top_len = rng.randint(1, w - 2), rng.randint(lo, hi)
    bottom_x, bottom_len = rng.randint(1, w - 2), rng.randint(lo, hi)
    obstacles |= {(top_x, y) for y in range(top_len)}
    obstacles |= {(bottom_x, w - 1 - y) for y in range(bottom_len)}
    obstacles -= {start, goal}
    return PathfindingInstance(w - 1, w - 1, start, goal, frozenset(obstacles), width=w, seed=seed)


def encoding_path(name: str) -> str:
    return str(resources.files("heurasp") / "encodings" / name)


def ship_encodings() -> dict:
    """Texts of the shipped A* and pathfinding encodings, keyed by file name."""
    return {name: (resources.files("heurasp") / "encodings" / name).read_text(encoding="utf-8")
            for name in SHIPPED}


def reference_astar(instance: PathfindingInstance):
    """Optimal path length by graph-search A* with the Manhattan heuristic, or NO_PATH."""
    gx, gy = instance.goal

    def h(p):
        return abs(p[0] - gx) + abs(p[1] - gy)

    def free(p):
        return (instance.xmin <= p[0] <= instance.xmax and instance.ymin <= p[1] <= instance.ymax
                and p not in instance.obstacles)

    start = instance.start
    best = {start: 0}
    frontier = [(h(start), 0, start)]
    explored = set()
    while frontier:
        _, g, node = heapq.heappop(frontier)
        if node == instance.goal:
            return g
        if node in explored:
            continue
        explored.add(node)
        x, y = node
        for nxt in ((x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)):
            if free(nxt) and nxt not in explored and g + 1 < best.get(nxt, math.inf):
                best[nxt] = g + 1
                heapq.heappush(frontier, (g + 1 + h(nxt), g + 1, nxt))
    return NO_PATH


@dataclass
class BenchRow:
    instance: str
    width: int | None
    seed: object
    config: str
    status: str
    time_s: float
    guesses: int | None = None
    conflicts: int | None = None
    ground_rules: int | None = None
    # outcome of the search, not part of the CSV
    cost: object = None
    answer: list = field(default_factory=list)

    def csv_row(self) -> dict:
        return {k: ("" if getattr(self, k) is None else getattr(self, k)) for k in CSV_COLUMNS}


_STAT = re.compile(r"^(guesses|conflicts|ground_rules|ground_directives): (\d+)$", re.M)
_COST = re.compile(r"cost_to_goal\((\d+)\)")


def _subprocess_env():
    env = dict(os.environ)
    pkg_root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
    env["PYTHONPATH"] = pkg_root + (os.pathsep + env["PYTHONPATH"] if env.get("PYTHONPATH") else "")
    return env


def _run_one(instance: PathfindingInstance, config: str, timeout: float, encodings) -> BenchRow:
    row = BenchRow(instance.name, instance.width, instance.seed, config, "ERROR", 0.0)
    if timeout is not None and timeout <= 0:
        row.status = "TIMEOUT"
        return row
    with tempfile.NamedTemporaryFile("w", suffix=".lp", delete=False) as fh:
        fh.write(instance.facts())
        path = fh.name
    cmd = [sys.executable, "-m", "heurasp.cli", *encodings, path, "--stats",
           "--filter", "cost_to_goal", "--filter", "failure", *CONFIGS[config]]
    start = time.monotonic()
    try:
        proc = subprocess.run(cmd, capture_output=True, text=True, timeout=timeout, env=_subprocess_env())
    except subprocess.TimeoutExpired:
        row.status = "TIMEOUT"
        row.time_s = round(time.monotonic() - start, 3)
        return row
    finally:
        os.unlink(path)
    row.time_s = round(time.monotonic() - start, 3)
    if proc.returncode not in (10, 20):
        return row
    row.status = "SAT" if proc.returncode == 10 else "UNSAT"
    stats = dict(_STAT.findall(proc.stdout))
    row.guesses = int(stats.get("guesses", 0))
    row.conflicts = int(stats.get("conflicts", 0))
    row.ground_rules = int(stats.get("ground_rules", 0))
    for line in proc.stdout.splitlines():
        if line.startswith("Answer "):
            row.answer = line.split(":", 1)[1].split()
    m = _COST.search(" ".join(row.answer))
    row.cost = int(m.group(1)) if m else (NO_PATH if "failure" in row.answer else None)
    return row


def run_benchmark(widths, seeds, configs=("heur", "no-heur"), timeout: float = 60.0,
                  jobs: int | None = None, instances=None, encoding="pathfinding.lp") -> list:
    """One subprocess per (instance, config); returns BenchRows in input order."""
    unknown = [c for c in configs if c not in CONFIGS]
    if unknown:
        raise ValueError(f"unknown configs {unknown}; choose from {sorted(CONFIGS)}")
    if instances is None:
        instances = [gen_pathfinding(w, s) for w in widths for s in seeds]
    encodings = [encoding_path("astar.lp"), encoding_path(encoding)]
    tasks = [(inst, cfg) for inst in instances for cfg in configs]
    jobs = jobs or max(1, min(len(tasks), os.cpu_count() or 1))
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(lambda t: _run_one(t[0], t[1], timeout, encodings), tasks))


def write_csv(rows, stream):
    writer = csv.DictWriter(stream, fieldnames=CSV_COLUMNS)
    writer.writeheader()
    for row in rows:
        writer.writerow(row.csv_row())


def main(argv=None):
    ap = argparse.ArgumentParser(prog="heurasp-bench", description="Grid pathfinding benchmark.")
    ap.add_argument("--widths", type=int, nargs="+", default=[5, 10, 15, 20, 25, 30])
    ap.add_argument("--seeds", type=int, nargs="+", default=[1, 2, 3])
    ap.add_argument("--configs", nargs="+", default=list(CONFIGS), choices=list(CONFIGS))
    ap.add_argument("--timeout", type=float, default=60.0)
    ap.add_argument("--jobs", type=int, default=None)
    ap.add_argument("--ondemand", action="store_true", help="use the on-demand state encoding")
    ap.add_argument("--out", default="-", help="CSV path, '-' for stdout")
    args = ap.parse_args(argv)
    enc = "pathfinding_ondemand.lp" if args.ondemand else "pathfinding.lp"
    rows = run_benchmark(args.widths, args.seeds, args.configs, args.timeout, args.jobs, encoding=enc)
    if args.out == "-":
        write_csv(rows, sys.stdout)
    else:
        with open(args.out, "w", newline="") as fh:
            write_csv(rows, fh)
    return 0


if __name__ == "__main__":
    sys.exit(main())
