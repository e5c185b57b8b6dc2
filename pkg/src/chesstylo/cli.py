"""Command-line entry points for batch experiments.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import attention_profiles, export_vectors, write_attention_json
from .baseline import BaselineEmbedder
from .encoding import SkipGame
from .evaluate import (ModelEmbedder, StylometryTask, build_game_store,
                       player_move_count, run_task)
from .pgn import (FilterConfig, ParseStats, build_player_corpora, filter_games,
                  filter_players, parse_pgn_file, read_records,
                  read_split_manifest, split_player, write_records,
                  write_split_manifest)
from .train import CorpusIndex, TrainConfig, Trainer, load_model
from .synthetic import generate_corpus, make_bot, records_to_pgn

log = logging.getLogger(__name__)


def _provenance(seed: int | None = None, config_hash: str | None = None) -> dict:
    prov = {"tool": "chesstylo", "version": __version__}
    if seed is not None:
        prov["seed"] = seed
    if config_hash is not None:
        prov["config_hash"] = config_hash
    return prov


def _load_corpus_dir(data_dir: str) -> tuple[list, dict]:
    data = Path(data_dir)
    records = list(read_records(data / "records.ndjson"))
    manifest = read_split_manifest(data / "splits.json")
    return records, manifest


def cmd_ingest(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    config = FilterConfig.from_file(args.filters) if args.filters else FilterConfig()
    stats = ParseStats()
    records = []
    for path in args.pgn:
        records.extend(parse_pgn_file(path, stats))
    log.info("parsed %d games, skipped %d", stats.parsed, stats.skipped)
    kept = list(filter_games(records, config.min_moves, config.time_control_range))
    corpora = filter_players(build_player_corpora(kept), config)
    splittable = {pid: c for pid, c in corpora.items()
                  if len(c.games) >= args.min_games}
    splits = [split_player(c, args.seed) for pid, c in sorted(splittable.items())]
    game_ids = {gid for s in splits
                for gid in s.train_ids + s.reference_ids + s.query_ids}
    write_records(out / "records.ndjson", (r for r in kept if r.game_id in game_ids))
    write_split_manifest(out / "splits.json", splits, args.seed)
    (out / "ingest_report.json").write_text(json.dumps({
        "provenance": _provenance(seed=args.seed),
        "parsed": stats.parsed, "skipped": stats.skipped,
        "kept_games": len(kept), "players": len(splittable),
    }, indent=1))
    print(f"ingested {len(splittable)} players ({len(kept)} games, "
          f"{stats.skipped} skipped) into {out}")
    return 0


def cmd_synth(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    bots = [make_bot(args.seed * 100 + i, args.noise) for i in range(args.bots)]
    records = generate_corpus(bots, args.games, args.seed)
    kept = list(filter_games(records, min_moves=args.min_moves,
                             time_control_range=None))
    corpora = build_player_corpora(kept)
    splits = [split_player(c, args.seed, min_games=10)
              for _, c in sorted(corpora.items())]
    write_records(out / "records.ndjson", kept)
    write_split_manifest(out / "splits.json", splits, args.seed)
    if args.pgn:
        (out / "corpus.pgn").write_text(records_to_pgn(kept))
    (out / "synth_report.json").write_text(json.dumps({
        "provenance": _provenance(seed=args.seed),
        "bots": [b.bot_id for b in bots],
        "games": len(kept),
    }, indent=1))
    print(f"generated {len(kept)} games for {len(bots)} bots into {out}")
    return 0


def cmd_train(args) -> int:
    overrides = {
        "n_players": args.n_players, "m_games": args.m_games,
        "window": args.window, "seed": args.seed, "max_steps": args.max_steps,
        "lr0": args.lr0, "checkpoint_every": args.checkpoint_every,
    }
    if args.config:
        config = TrainConfig.from_file(args.config, overrides)
    else:
        config = TrainConfig.from_dict({}, overrides)
    records, manifest = _load_corpus_dir(args.data)
    corpus = CorpusIndex.build(records, manifest, "train")
    val_corpus = CorpusIndex.build(records, manifest, "reference")
    trainer = Trainer(config, corpus, val_corpus)
    if args.resume:
        trainer.load(args.resume)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    trainer.train(metrics_path=out / "metrics.ndjson", ckpt_dir=out)
    final = sorted(out.glob("step*.ckpt"))[-1]
    print(f"trained to step {trainer.step}; final checkpoint {final}")
    return 0


def cmd_embed(args) -> int:
    extractor, encoder, _, config = load_model(args.ckpt)
    embedder = ModelEmbedder(extractor, encoder)
    records = list(read_records(args.games))
    with open(args.out, "w") as fh:
        fh.write(json.dumps({"provenance": _provenance(config_hash=config.hash()),
                             "k": args.k}) + "\n")
        n = 0
        for rec in records:
            players = [p for p in (rec.white_id, rec.black_id)
                       if args.players is None or p in args.players]
            for pid in players:
                if not embedder.usable(rec, pid, args.k):
                    continue
                vec = embedder.game_vectors([(rec, pid)], args.k)[0]
                fh.write(json.dumps({
                    "game_id": rec.game_id, "player_id": pid,
                    "values": [float(x) for x in vec]}) + "\n")
                n += 1
    print(f"embedded {n} game/player pairs to {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    task = StylometryTask.from_file(args.task)
    extractor, encoder, _, config = load_model(args.ckpt)
    embedder = ModelEmbedder(extractor, encoder)
    records, manifest = _load_corpus_dir(args.data)
    store = build_game_store(records, manifest)
    result = run_task(task, embedder, store)
    payload = json.loads(result.to_json())
    payload["provenance"] = _provenance(seed=task.seed, config_hash=config.hash())
    Path(args.out).write_text(json.dumps(payload, indent=1))
    print(f"P@1={result.precision_at_1:.4f} P@5={result.precision_at_5:.4f} "
          f"MRR={result.mrr:.4f} -> {args.out}")
    return 0


def cmd_baseline(args) -> int:
    task = StylometryTask.from_file(args.task)
    embedder = BaselineEmbedder(args.mode)
    records, manifest = _load_corpus_dir(args.data)
    store = build_game_store(records, manifest)
    result = run_task(task, embedder, store)
    payload = json.loads(result.to_json())
    payload["provenance"] = _provenance(seed=task.seed)
    payload["mode"] = args.mode
    Path(args.out).write_text(json.dumps(payload, indent=1))
    print(f"baseline[{args.mode}] P@1={result.precision_at_1:.4f} -> {args.out}")
    return 0


def cmd_export(args) -> int:
    vectors, metadata = [], []
    with open(args.embeddings) as fh:
        for line in fh:
            row = json.loads(line)
            if "values" not in row:
                continue  # provenance header line
            vectors.append(row["values"])
            metadata.append({"game_id": row.get("game_id", ""),
                             "player_id": row.get("player_id", "")})
    if args.meta:
        extra = [json.loads(line) for line in open(args.meta) if line.strip()]
        by_key = {(m.get("game_id", ""), m.get("player_id", "")): m for m in extra}
        for m in metadata:
            m.update(by_key.get((m["game_id"], m["player_id"]), {}))
    vec_path, meta_path = export_vectors(np.array(vectors), metadata, args.out)
    print(f"wrote {vec_path} and {meta_path}")
    return 0


def cmd_attention(args) -> int:
    extractor, encoder, _, config = load_model(args.ckpt)
    records = list(read_records(args.games))
    pairs = []
    for rec in records:
        for pid in (rec.white_id, rec.black_id):
            if player_move_count(rec, pid) > 0:
                pairs.append((rec, pid))
    k_list = [int(k) for k in args.k_list.split(",")]
    profiles = attention_profiles(extractor, encoder, pairs, k_list)
    write_attention_json(args.out, profiles,
                         provenance=_provenance(config_hash=config.hash()))
    print(f"wrote attention profiles for k in {k_list} to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chesstylo", description="Chess behavioral stylometry toolkit")
    parser.add_argument("--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse and split PGN archives")
    p.add_argument("--pgn", nargs="+", required=True)
    p.add_argument("--filters", help="JSON filter config")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--min-games", type=int, default=10)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("synth", help="generate a synthetic bot corpus")
    p.add_argument("--bots", type=int, default=8)
    p.add_argument("--games", type=int, required=True,
                   help="games per bot pair")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise", type=float, default=0.1)
    p.add_argument("--min-moves", type=int, default=10)
    p.add_argument("--pgn", action="store_true", help="also write corpus.pgn")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train the embedding model")
    p.add_argument("--data", required=True)
    p.add_argument("--config", help="JSON TrainConfig file")
    p.add_argument("--out", required=True)
    p.add_argument("--resume", help="checkpoint to resume from")
    p.add_argument("--n-players", type=int)
    p.add_argument("--m-games", type=int)
    p.add_argument("--window", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--max-steps", type=int)
    p.add_argument("--lr0", type=float)
    p.add_argument("--checkpoint-every", type=int)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("embed", help="emit game embeddings")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--games", required=True, help="records NDJSON file")
    p.add_argument("--players", nargs="*", default=None)
    p.add_argument("--k", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("evaluate", help="run a stylometry task")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--task", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("baseline", help="run the openings baseline")
    p.add_argument("--mode", choices=["5hot", "all"], default="5hot")
    p.add_argument("--task", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("export", help="write projector TSV pair")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--meta")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("attention", help="attention profiles over positions")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--games", required=True)
    p.add_argument("--k-list", default="0,5,10,15")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_attention)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except FloatingPointError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    except (ValueError, KeyError, OSError, SkipGame, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
