"""Command line for activation extraction.

Exit codes: 0 on success (skipped images are reported but not fatal),
2 for invalid input such as a malformed manifest or unknown layer index.
"""

from __future__ import annotations

import logging
import sys

import click

from .extract import extract_to_file, read_manifest
from .resnet import DEFAULT_LAYERS, build_network, enumerate_conv_layers

INVALID_INPUT = 2


@click.command()
@click.option("--images", "manifest_path", type=click.Path(exists=True), required=True,
              help="CSV manifest: item_id,image_id,path (header optional).")
@click.option("--layers", default=",".join(str(i) for i in DEFAULT_LAYERS),
              show_default=True, help="Comma-separated 1-based conv layer indices.")
@click.option("--batch", "batch_size", type=int, default=8, show_default=True,
              help="Images per inference batch.")
@click.option("--out", type=click.Path(), required=True, help="Output OVAC stream path.")
@click.option("--capture", type=click.Choice(["bn", "conv"]), default="bn",
              show_default=True,
              help="Record the value after batch-norm (pre-ReLU) or the raw conv output.")
@click.option("--weights", type=click.Choice(["pretrained", "random"]),
              default="pretrained", show_default=True,
              help="Network weights; 'random' is seeded and needs no download.")
@click.option("--seed", type=int, default=0, show_default=True,
              help="Weight initialization seed when --weights random.")
@click.option("--list-layers", is_flag=True,
              help="Print the layer enumeration and exit.")
def main(manifest_path, layers, batch_size, out, capture, weights, seed, list_layers):
    """Extract pre-ReLU convolutional activations into an OVAC stream."""
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="%(levelname)s %(message)s")
    try:
        model = build_network(weights=weights, seed=seed)
        if list_layers:
            for layer in enumerate_conv_layers(model):
                click.echo(f"{layer.index}\t{layer.channels}\t{layer.name}")
            return
        indices = [int(part) for part in layers.split(",") if part.strip()]
        if not indices:
            raise ValueError("--layers must name at least one layer")
        with open(manifest_path, "r", encoding="utf-8", newline="") as f:
            entries = read_manifest(f)
        summary = extract_to_file(out, model, entries, indices,
                                  batch_size=batch_size, capture=capture)
    except (ValueError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(INVALID_INPUT)
    click.echo(
        f"wrote {summary.records_written} records to {out}"
        f" ({summary.images_skipped} images skipped)",
        err=True,
    )


if __name__ == "__main__":
    main()
