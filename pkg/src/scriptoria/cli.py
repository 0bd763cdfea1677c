"""Command-line interface.

Exit codes: 0 success, 1 usage, 2 I/O, 3 validation/format, 4 analysis.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import FormatError, ScriptoriaError, ValidationError
from .evaluate import (
    CorpusDoc,
    EvalConfig,
    distance_matrix_csv,
    evaluate_pairwise,
    extract_corpus_features,
    load_manifest,
)
from .features import FeatureVector, MeasureSet, build_feature_vector, compare
from .imaging import GrayImage, binarize, load_gray
from .layout import layout_from_json, layout_measures
from .matcher import MatcherConfig, TemplateQuery, run_search
from .network import load_network, random_network, save_network
from .store import analyze_source, binarize_auto, matches_to_json
from .synthetic import (
    GroundTruth,
    WriterProfile,
    export_glyph_dataset,
    generate_document,
    profile_grid,
)

EXIT_USAGE = 1
EXIT_IO = 2
EXIT_VALIDATION = 3
EXIT_ANALYSIS = 4


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse defaults to exit code 2
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def save_mask_png(mask: np.ndarray, path: Path) -> None:
    """Write an ink mask as a black-on-white PNG."""
    Image.fromarray(((1 - mask) * 255).astype(np.uint8), mode="L").save(path)


def _cmd_analyze(args) -> int:
    image_bytes = Path(args.image).read_bytes()
    analysis = analyze_source(
        image_bytes,
        source_name=args.image,
        method=args.method,
        threshold=args.threshold,
        medium=args.medium,
        invert=args.invert,
        so=args.so,
    )
    print(analysis.layout_json)
    if args.out:
        # --out is one document's workspace, not a multi-document store.
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "record.json").write_text(analysis.record.to_json())
        (out / "layout.json").write_text(analysis.layout_json)
        bands, words = layout_from_json(analysis.layout_json)
        fv = build_feature_vector(
            MeasureSet.from_layout(layout_measures(bands, words)),
            doc_id=analysis.record.id,
            mode="raw",
        )
        (out / "features.json").write_text(fv.to_json())
    return 0


def _cmd_search(args) -> int:
    image_bytes = Path(args.image).read_bytes()
    analysis = analyze_source(image_bytes, source_name=args.image, so=args.so)
    crop_gray = load_gray(args.template)
    crop_mask = binarize(crop_gray, "fixed", 128)
    patch = GrayImage(
        crop_mask.width, crop_mask.height, (crop_mask.mask * 255).astype(np.uint8)
    )
    query = TemplateQuery(
        doc_id=analysis.record.id,
        bbox=(0, 0, crop_mask.height, crop_mask.width),
        label=args.label,
        patch=patch,
    )
    bands, _ = layout_from_json(analysis.layout_json)
    cfg = MatcherConfig(
        t_c=args.tc,
        run_length=args.run_length,
        stride=args.stride,
        embedder=load_network(args.weights) if args.weights else None,
    )
    result = run_search(analysis.image, bands, query, cfg)
    text = matches_to_json(result, "cli", args.label)
    print(text)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "matches.json").write_text(text)
    return 0


def _cmd_compare(args) -> int:
    fa = FeatureVector.from_json((Path(args.dir_a) / "features.json").read_text())
    fb = FeatureVector.from_json((Path(args.dir_b) / "features.json").read_text())
    result = compare(fa, fb, args.threshold)
    print(result.to_json(a=fa.doc_id, b=fb.doc_id))
    return 0


def _cmd_evaluate(args) -> int:
    entries = load_manifest(args.manifest)
    corpus = []
    for path, writer_id in entries:
        gray = load_gray(path)
        mask, _, _ = binarize_auto(gray)
        gt_path = Path(str(path) + ".gt.json")
        gt = GroundTruth.from_json(gt_path.read_text()) if gt_path.exists() else None
        corpus.append(CorpusDoc(doc_id=path.stem, image=mask, writer_id=writer_id, ground_truth=gt))
    config = EvalConfig(
        templates=tuple(args.templates.split(",")) if args.templates else (),
        so=args.so,
        t_c=args.tc,
        run_length=args.run_length,
        normalization=args.mode,
        calib_fraction=args.calib_frac,
        seed=args.seed,
        workers=args.workers,
    )
    extracted = extract_corpus_features(corpus, config)
    report = evaluate_pairwise(corpus, config, precomputed=extracted)
    text = report.to_json()
    print(text)
    if args.out:
        Path(args.out).write_text(text)
    if args.matrix:
        Path(args.matrix).write_text(distance_matrix_csv([fv for _, fv in extracted[0]]))
    return 0


def _cmd_gen_corpus(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    profiles = profile_grid(args.writers)
    labels = tuple(args.labels.split(",")) if args.labels else ()
    rows = ["path,writer_id"]
    for w, prof in enumerate(profiles):
        for d in range(args.docs):
            img, gt = generate_document(
                prof,
                seed=args.seed + 1000 * w + d,
                lines=args.lines,
                words_per_line=args.words,
                required_labels=labels,
            )
            name = f"w{w:02d}d{d}.png"
            save_mask_png(img.mask, out / name)
            (out / f"{name}.gt.json").write_text(gt.to_json())
            rows.append(f"{name},w{w:02d}")
    (out / "manifest.csv").write_text("\n".join(rows) + "\n")
    print(json.dumps({"documents": args.writers * args.docs, "manifest": str(out / "manifest.csv")}))
    return 0


def _cmd_gen_doc(args) -> int:
    if args.profile:
        profile = WriterProfile.from_json(Path(args.profile).read_text())
    else:
        profile = profile_grid(max(args.writer + 1, 1))[args.writer]
    img, gt = generate_document(
        profile,
        seed=args.seed,
        lines=args.lines,
        words_per_line=args.words,
        required_labels=tuple(args.labels.split(",")) if args.labels else (),
    )
    save_mask_png(img.mask, Path(args.out))
    gt_path = args.gt or f"{args.out}.gt.json"
    Path(gt_path).write_text(gt.to_json())
    print(json.dumps({"image": args.out, "ground_truth": str(gt_path)}))
    return 0


def _cmd_gen_glyphs(args) -> int:
    export_glyph_dataset(args.out, per_class=args.per_class, seed=args.seed)
    print(json.dumps({"dataset": args.out, "per_class": args.per_class}))
    return 0


def _cmd_gen_weights(args) -> int:
    filters = tuple(int(v) for v in args.filters.split(","))
    if len(filters) != 3:
        raise ValidationError("--filters needs three comma-separated counts")
    net = random_network(args.seed, filters)
    save_network(net, args.out)
    print(json.dumps({"weights": args.out, "filters": list(filters)}))
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import DEFAULT_PORT, ServiceConfig, create_app

    root = args.root or os.environ.get("SCRIPTORIA_ROOT") or "./scriptoria-store"
    port = args.port or int(os.environ.get("SCRIPTORIA_PORT", DEFAULT_PORT))
    config = ServiceConfig.from_json_file(args.config) if args.config else ServiceConfig()
    uvicorn.run(create_app(root, config), host=args.host, port=port, log_level="info")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="scriptoria", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="binarize an image and detect lines/words")
    p.add_argument("image")
    p.add_argument("--so", type=int, default=None, help="space threshold override (pixels)")
    p.add_argument("--method", choices=("otsu", "fixed"), default="otsu")
    p.add_argument("--threshold", type=int, default=None)
    p.add_argument("--medium", choices=("paper-scan", "tablet"), default="paper-scan")
    p.add_argument("--invert", action="store_true", help="input is light-on-dark")
    p.add_argument("--out", default=None, help="directory for JSON artifacts")
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("search", help="search a template crop in a document")
    p.add_argument("image")
    p.add_argument("--template", required=True, help="character crop (PNG/PGM)")
    p.add_argument("--label", default="t")
    p.add_argument("--tc", type=float, default=0.1)
    p.add_argument("--run-length", type=int, default=5)
    p.add_argument("--stride", type=int, default=1)
    p.add_argument("--so", type=int, default=None)
    p.add_argument("--weights", default=None, help="HWNET1 weight file (default: pixel fallback)")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_search)

    p = sub.add_parser("compare", help="compare two analyzed documents")
    p.add_argument("dir_a")
    p.add_argument("dir_b")
    p.add_argument("--threshold", type=float, default=4.0)
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("evaluate", help="pairwise writer verification over a corpus")
    p.add_argument("--manifest", required=True)
    p.add_argument("--templates", default="", help="comma-separated template labels")
    p.add_argument("--calib-frac", type=float, default=0.3)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--so", type=int, default=None)
    p.add_argument("--tc", type=float, default=0.1)
    p.add_argument("--run-length", type=int, default=1)
    p.add_argument("--mode", choices=("raw", "scale_invariant"), default="raw")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default=None)
    p.add_argument("--matrix", default=None, help="write the pairwise distance matrix CSV here")
    p.set_defaults(func=_cmd_evaluate)

    gen = sub.add_parser("gen", help="synthetic data generators")
    gsub = gen.add_subparsers(dest="gen_command", required=True)

    p = gsub.add_parser("corpus", help="corpus of synthetic writers")
    p.add_argument("--out", required=True)
    p.add_argument("--writers", type=int, default=20)
    p.add_argument("--docs", type=int, default=4)
    p.add_argument("--lines", type=int, default=5)
    p.add_argument("--words", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--labels", default="a,e", help="labels guaranteed present")
    p.set_defaults(func=_cmd_gen_corpus)

    p = gsub.add_parser("doc", help="single synthetic document")
    p.add_argument("--out", required=True)
    p.add_argument("--gt", default=None)
    p.add_argument("--writer", type=int, default=0)
    p.add_argument("--profile", default=None, help="WriterProfile JSON file (overrides --writer)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lines", type=int, default=5)
    p.add_argument("--words", type=int, default=5)
    p.add_argument("--labels", default="")
    p.set_defaults(func=_cmd_gen_doc)

    p = gsub.add_parser("glyphs", help="labeled 28x28 glyph dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--per-class", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_gen_glyphs)

    p = gsub.add_parser("weights", help="random HWNET1 weight file")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=17)
    p.add_argument("--filters", default="4,8,8")
    p.set_defaults(func=_cmd_gen_weights)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--root", default=None)
    p.add_argument("--port", type=int, default=None)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--config", default=None, help="ServiceConfig JSON file")
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, FormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ScriptoriaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ANALYSIS
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
