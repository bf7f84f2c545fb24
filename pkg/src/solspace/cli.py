"""Batch entry points: dataset synthesis and ingest, embedding, clustering,
the navigation-policy simulation harness, CSV export, and the HTTP server."""

from __future__ import annotations

import csv
import json
import sys
from pathlib import Path

import click
import numpy as np

from . import cluster as cluster_mod
from . import ingest, recommend, simulate as sim
from .config import EngineConfig
from .core import FeatureWeights
from .errors import SolspaceError
from .reduce import TsneConfig, pca, tsne

click.UsageError.exit_code = 1


def _load_space(path: str, descriptor_pairs: int = 2048):
    p = Path(path)
    if p.suffix == ".npz":
        return ingest.load_space(p)
    return ingest.load_dataset(p, descriptor_pairs=descriptor_pairs)


@click.group()
def main():
    """Solution-space exploration engine."""


@main.command()
@click.option("--grid-default", is_flag=True, help="Use the full 16,800-design factorial grid.")
@click.option("--middle-loads", default=None, help="Comma-separated middle loads (N).")
@click.option("--outer-loads", default=None, help="Comma-separated outer loads (N).")
@click.option("--voxel-sizes", default=None, help="Comma-separated voxel sizes (mm).")
@click.option("--vm-levels", default=None, type=int, help="Number of volume-minimization levels.")
@click.option("--seed", default=0, type=int)
@click.option("--out", required=True, type=click.Path())
def synth(grid_default, middle_loads, outer_loads, voxel_sizes, vm_levels, seed, out):
    """Generate a synthetic monitor-stand dataset."""
    kwargs = {"seed": seed}
    if not grid_default:
        if middle_loads:
            kwargs["middle_loads"] = [float(x) for x in middle_loads.split(",")]
        if outer_loads:
            kwargs["outer_loads"] = [float(x) for x in outer_loads.split(",")]
        if voxel_sizes:
            kwargs["voxel_sizes"] = [float(x) for x in voxel_sizes.split(",")]
        if vm_levels:
            kwargs["vm_levels"] = list(range(1, vm_levels + 1))
    cfg = ingest.SynthConfig(**kwargs)
    manifest = ingest.generate_synthetic(cfg, out)
    click.echo(f"wrote {manifest.count} solutions to {out}")


@main.command(name="ingest")
@click.argument("dataset", type=click.Path(exists=True))
@click.option("--descriptor-pairs", default=2048, type=int)
@click.option("--cache", default=None, type=click.Path(),
              help="Write the ingested space to a reusable .npz cache.")
def ingest_cmd(dataset, descriptor_pairs, cache):
    """Load and validate a dataset directory."""
    space = ingest.load_dataset(dataset, descriptor_pairs=descriptor_pairs)
    click.echo(f"loaded {len(space)} solutions, "
               f"{space.n_metric} metric channels, {space.n_shape} shape bins")
    if cache:
        ingest.save_space(space, cache)
        click.echo(f"cached space at {cache}")


@main.command()
@click.option("--space", "space_path", required=True, type=click.Path(exists=True))
@click.option("--method", type=click.Choice(["pca", "tsne"]), default="pca")
@click.option("--seed", default=0, type=int)
@click.option("--perplexity", default=30.0, type=float)
@click.option("--iterations", default=1000, type=int)
@click.option("--out", required=True, type=click.Path())
def embed(space_path, method, seed, perplexity, iterations, out):
    """Embed a space into 3D and write id,x,y,z rows."""
    space = _load_space(space_path)
    w = FeatureWeights.uniform(space.n_metric, space.n_shape)
    points = recommend.weighted_feature_matrix(space.metric, space.shape, w)
    if method == "pca":
        emb = pca(points, 3)
    else:
        emb = tsne(points, TsneConfig(perplexity=perplexity, iterations=iterations, seed=seed))
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "x", "y", "z"])
        for sol, row in zip(space.solutions, emb.coords):
            writer.writerow([sol.id, repr(float(row[0])), repr(float(row[1])),
                             repr(float(row[2]))])
    click.echo(f"embedded {len(space)} solutions via {method} -> {out}")


@main.command(name="cluster")
@click.option("--space", "space_path", required=True, type=click.Path(exists=True))
@click.option("--k", default=None, type=int)
@click.option("--seed", default=0, type=int)
@click.option("--out", required=True, type=click.Path())
def cluster_cmd(space_path, k, seed, out):
    """Cluster a space and write the cluster tree as JSON."""
    space = _load_space(space_path)
    w = FeatureWeights.uniform(space.n_metric, space.n_shape)
    points = recommend.weighted_feature_matrix(space.metric, space.shape, w)
    k_eff = k if k is not None else cluster_mod.choose_k(len(space))
    tree = cluster_mod.kmeans(points, k_eff, seed)
    Path(out).write_bytes(tree.serialize())
    click.echo(f"clustered {len(space)} solutions into {k_eff} clusters -> {out}")


@main.command()
@click.option("--port", default=8000, type=int)
@click.option("--data-root", default=".", type=click.Path())
@click.option("--config", "config_path", default=None, type=click.Path(exists=True))
@click.option("--host", default="127.0.0.1")
def serve(port, data_root, config_path, host):
    """Run the HTTP service."""
    import uvicorn

    from .service import create_app

    cfg = EngineConfig.load(config_path) if config_path else EngineConfig()
    uvicorn.run(create_app(data_root=data_root, config=cfg), host=host, port=port)


@main.command(name="simulate")
@click.option("--space", "space_path", default=None, type=click.Path(exists=True))
@click.option("--synthetic", default=None, type=int,
              help="Use an in-memory blob-structured space of this size instead.")
@click.option("--policy", type=click.Choice(["stochastic", "recommender", "hybrid", "all"]),
              default="all")
@click.option("--targets", default=20, type=int)
@click.option("--rho", default=0.5, type=float)
@click.option("--switch-cycle", default=2, type=int)
@click.option("--seed", default=0, type=int)
@click.option("--out", required=True, type=click.Path())
def simulate_cmd(space_path, synthetic, policy, targets, rho, switch_cycle, seed, out):
    """Run oracle-user navigation simulations and emit a CSV report."""
    if synthetic:
        space = sim.make_feature_space(synthetic, seed=seed)
    elif space_path:
        space = _load_space(space_path)
    else:
        raise click.UsageError("pass --space or --synthetic N")
    rng = np.random.default_rng(seed)
    target_ids = [space.solutions[i].id
                  for i in rng.choice(len(space), size=min(targets, len(space)), replace=False)]
    policies = (["stochastic", "recommender", "hybrid"] if policy == "all" else [policy])
    traces = []
    for kind in policies:
        for tid in target_ids:
            traces.append(sim.simulate(space, sim.Policy(kind, switch_cycle=switch_cycle),
                                       tid, rho=rho, rng_seed=seed))
    sim.write_traces_csv(traces, out)
    for kind in policies:
        sub = [t for t in traces if t.policy == kind]
        found = [t for t in sub if t.found]
        mean_insp = np.mean([t.total_inspections for t in found]) if found else float("nan")
        click.echo(f"{kind}: located {len(found)}/{len(sub)} targets, "
                   f"mean inspections {mean_insp:.1f}")
    click.echo(f"wrote {out}")


@main.command()
@click.option("--space", "space_path", required=True, type=click.Path(exists=True))
@click.option("--format", "fmt", type=click.Choice(["csv"]), default="csv")
@click.option("--method", type=click.Choice(["pca", "tsne"]), default="pca")
@click.option("--seed", default=0, type=int)
@click.option("--out", required=True, type=click.Path())
def export(space_path, fmt, method, seed, out):
    """Export one row per solution: id, property channels, embedding coords."""
    space = _load_space(space_path)
    w = FeatureWeights.uniform(space.n_metric, space.n_shape)
    points = recommend.weighted_feature_matrix(space.metric, space.shape, w)
    if method == "pca":
        emb = pca(points, 3)
    else:
        emb = tsne(points, TsneConfig(seed=seed))
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", *space.metric_channels, "x", "y", "z"])
        for i, sol in enumerate(space.solutions):
            raw = [space.raw_value(i, ch) for ch in space.metric_channels]
            writer.writerow([sol.id, *raw, *emb.coords[i]])
    click.echo(f"exported {len(space)} rows -> {out}")


def entrypoint(argv=None) -> int:
    try:
        main.main(args=argv, standalone_mode=False)
        return 0
    except click.UsageError as e:
        e.show()
        return 1
    except click.ClickException as e:
        e.show()
        return 1
    except click.exceptions.Abort:
        return 1
    except SolspaceError as e:
        click.echo(f"error: {e}", err=True)
        return 1
    except Exception as e:  # internal failure
        click.echo(f"internal error: {e}", err=True)
        return 2


if __name__ == "__main__":
    sys.exit(entrypoint())
