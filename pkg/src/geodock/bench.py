"""Throughput sweeps over worker/device counts and the hybrid-vs-split comparison."""
from __future__ import annotations

from dataclasses import dataclass, replace

from .pipeline import NodeConfig, run_screening, simulate_schedule, summarize

DEFAULT_BATCH = 1500


def sweep(workers, devices, base: NodeConfig, n_ligands: int = DEFAULT_BATCH,
          library=None, pocket=None, params=None) -> list[dict]:
    """One summary row per ``(workers, devices)`` pair, workers varying fastest."""
    rows = []
    for d in devices:
        for w in workers:
            config = replace(base, n_workers=w, n_devices=d)
            if config.mode == "synthetic":
                metrics = simulate_schedule(config, n_ligands)
            else:
                _, metrics = run_screening(library, pocket, params, config)
            rows.extend(summarize(metrics))
    return rows


@dataclass(frozen=True)
class NodeChoice:
    hybrid_workers: int
    cpu_processes: int
    device_processes: int
    throughput: float


def cpu_process_rate(config: NodeConfig) -> float:
    """Ligands per time unit of one single-threaded CPU-only process."""
    return 1.0 / (config.t_align_cpu + config.t_opt_cpu)


def device_process_rate(config: NodeConfig) -> float:
    """Ligands per time unit of one process docking whole ligands on a device."""
    return 1.0 / (config.t_align_device + config.t_opt_device)


def best_hybrid(n_devices: int, cores: int, base: NodeConfig,
                n_ligands: int = DEFAULT_BATCH) -> NodeChoice:
    """Best ``hybrid(n workers, k devices) + (cores - n) CPU processes``."""
    best = None
    for n in range(1, cores + 1):
        config = replace(base, mode="synthetic", n_workers=n, n_devices=n_devices)
        rate = simulate_schedule(config, n_ligands).throughput + (cores - n) * cpu_process_rate(base)
        if best is None or rate > best.throughput:
            best = NodeChoice(n, cores - n, 0, rate)
    return best


def best_split(n_devices: int, cores: int, base: NodeConfig) -> NodeChoice:
    """Best naive split: ``k`` whole-ligand device processes beside CPU processes."""
    best = None
    for k in range(0, n_devices + 1):
        for m in range(0, cores - k + 1):
            rate = k * device_process_rate(base) + m * cpu_process_rate(base)
            if best is None or rate > best.throughput:
                best = NodeChoice(0, m, k, rate)
    return best


def compare_hybrid_vs_split(device_counts, cores: int = 16, base: NodeConfig | None = None,
                            n_ligands: int = DEFAULT_BATCH) -> list[dict]:
    base = base or NodeConfig(n_workers=1, mode="synthetic")
    rows = []
    for k in device_counts:
        hy = best_hybrid(k, cores, base, n_ligands)
        sp = best_split(k, cores, base)
        rows.append({
            "devices": k,
            "hybrid_workers": hy.hybrid_workers,
            "hybrid_cpu_processes": hy.cpu_processes,
            "hybrid_throughput": hy.throughput,
            "split_device_processes": sp.device_processes,
            "split_cpu_processes": sp.cpu_processes,
            "split_throughput": sp.throughput,
            "improvement": hy.throughput / sp.throughput - 1.0,
        })
    return rows
