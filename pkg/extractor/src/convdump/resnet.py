"""Convolution-layer enumeration and capture-point resolution.

Layers are numbered by forward execution order, 1-based, counting every
convolution the network runs, including the 1x1 projection convolutions
on shortcut branches.  The numbering is discovered by hooking a dummy
forward pass, so it is stable for a fixed architecture.

The capture point for a layer is either the convolution's own output
("conv") or the output of the batch-norm that consumes it ("bn", the
default): the value feeding the nonlinearity, before the ReLU.
"""

from __future__ import annotations

from typing import Dict, List, NamedTuple

import torch
from torch import nn
from torchvision.models import resnet50

CAPTURE_POINTS = ("bn", "conv")
DEFAULT_LAYERS = (8, 18, 31)
INPUT_SIZE = 224


class ConvLayer(NamedTuple):
    index: int        # 1-based forward-execution position
    channels: int     # output channels
    name: str         # qualified module name within the network


def build_network(weights: str = "pretrained", seed: int = 0) -> nn.Module:
    """A 50-layer residual network in eval mode.

    ``weights="random"`` seeds the global generator and initializes fresh
    weights, which keeps the architecture (and hence the layer
    enumeration) identical while avoiding any download.
    """
    if weights == "pretrained":
        model = resnet50(weights="IMAGENET1K_V2")
    elif weights == "random":
        torch.manual_seed(seed)
        model = resnet50(weights=None)
    else:
        raise ValueError(f"weights must be 'pretrained' or 'random', got {weights!r}")
    model.eval()
    return model


def enumerate_conv_layers(model: nn.Module) -> List[ConvLayer]:
    """All convolutions in forward execution order.

    The list is produced by running a zero batch through the network once
    and recording each convolution as it fires.
    """
    names = {module: name for name, module in model.named_modules()}
    entries: List[ConvLayer] = []

    def hook(module, inputs, output):
        entries.append(
            ConvLayer(len(entries) + 1, module.out_channels, names.get(module, ""))
        )

    handles = [
        module.register_forward_hook(hook)
        for module in model.modules()
        if isinstance(module, nn.Conv2d)
    ]
    try:
        model.eval()
        with torch.no_grad():
            model(torch.zeros(1, 3, INPUT_SIZE, INPUT_SIZE))
    finally:
        for handle in handles:
            handle.remove()
    return entries


def _pair_convs_with_bns(model: nn.Module) -> Dict[int, nn.Module]:
    """Map each conv index to the batch-norm that consumes its output.

    Pairing is by tensor identity during one forward pass: a batch-norm
    whose input is exactly some convolution's output belongs to that
    convolution.
    """
    conv_by_output: Dict[int, int] = {}
    conv_count = 0
    pairs: Dict[int, nn.Module] = {}

    def conv_hook(module, inputs, output):
        nonlocal conv_count
        conv_count += 1
        conv_by_output[id(output)] = conv_count

    def bn_hook(module, inputs, output):
        index = conv_by_output.get(id(inputs[0]))
        if index is not None and index not in pairs:
            pairs[index] = module

    handles = []
    for module in model.modules():
        if isinstance(module, nn.Conv2d):
            handles.append(module.register_forward_hook(conv_hook))
        elif isinstance(module, nn.BatchNorm2d):
            handles.append(module.register_forward_hook(bn_hook))
    try:
        model.eval()
        with torch.no_grad():
            model(torch.zeros(1, 3, INPUT_SIZE, INPUT_SIZE))
    finally:
        for handle in handles:
            handle.remove()
    return pairs


def capture_modules(
    model: nn.Module, indices: List[int], capture: str = "bn"
) -> Dict[int, nn.Module]:
    """The module whose output to record for each requested layer index."""
    if capture not in CAPTURE_POINTS:
        raise ValueError(f"capture must be one of {CAPTURE_POINTS}, got {capture!r}")
    layers = enumerate_conv_layers(model)
    valid = {layer.index for layer in layers}
    bad = sorted(set(indices) - valid)
    if bad:
        raise ValueError(
            f"invalid layer indices {bad}; this network has layers 1..{len(layers)}"
        )

    if capture == "conv":
        by_name = {name: m for name, m in model.named_modules()}
        return {i: by_name[layers[i - 1].name] for i in indices}

    pairs = _pair_convs_with_bns(model)
    missing = sorted(i for i in indices if i not in pairs)
    if missing:
        raise ValueError(f"no batch-norm follows conv layers {missing}; use capture='conv'")
    return {i: pairs[i] for i in indices}
