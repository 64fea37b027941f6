"""Compares the torch U-Net against vectors written by parity_dump, then
writes a torch-initialised model and its output for `parity_dump --check`.

    python check_parity.py <dir> [--tol 1e-4]
"""

import argparse
import pathlib
import sys

import numpy as np
import torch

from evocr_brw1 import HEIGHT, IN_CHANNELS, WIDTH, UNet


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("dir", type=pathlib.Path)
    ap.add_argument("--tol", type=float, default=1e-4)
    ap.add_argument("--threshold", type=float, default=0.5)
    args = ap.parse_args()

    raw = (args.dir / "model.brw1").read_bytes()
    model = UNet().load_brw1(raw).eval()
    if model.to_brw1() != raw:
        print("FAIL re-saved weights differ from the original file")
        return 1

    grids = sorted(args.dir.glob("grid_*.f32"), key=lambda p: int(p.stem.split("_")[1]))
    if not grids:
        print("FAIL no vectors found")
        return 1
    worst = 0.0
    flips = 0
    for path in grids:
        k = path.stem.split("_")[1]
        x = np.fromfile(path, dtype="<f4").reshape(1, IN_CHANNELS, HEIGHT, WIDTH)
        ref = np.fromfile(args.dir / f"prob_{k}.f32", dtype="<f4").reshape(HEIGHT, WIDTH)
        ref_bin = np.fromfile(args.dir / f"bin_{k}.u8", dtype=np.uint8).reshape(HEIGHT, WIDTH)
        with torch.no_grad():
            out = model(torch.from_numpy(x))[0, 0].numpy()
        err = float(np.abs(out - ref).max())
        worst = max(worst, err)
        # Pixels within the tolerance of the threshold may legitimately flip.
        decided = np.abs(out - args.threshold) > args.tol
        flips += int(((out >= args.threshold) != ref_bin.astype(bool))[decided].sum())
        print(f"vector {k}: max |diff| {err:.2e}, prob range [{out.min():.3f}, {out.max():.3f}]")

    # Reverse direction: a torch-initialised model for the library to load.
    torch.manual_seed(0)
    fresh = UNet().eval()
    (args.dir / "torch_model.brw1").write_bytes(fresh.to_brw1())
    x = np.fromfile(grids[-1], dtype="<f4").reshape(1, IN_CHANNELS, HEIGHT, WIDTH)
    with torch.no_grad():
        fresh(torch.from_numpy(x))[0, 0].numpy().astype("<f4").tofile(args.dir / "torch_prob.f32")
    (args.dir / "torch_grid.f32").write_bytes(grids[-1].read_bytes())

    ok = worst <= args.tol and flips == 0
    print(f"{'PASS' if ok else 'FAIL'} {len(grids)} vectors, max |diff| {worst:.2e} (tol {args.tol:g}), "
          f"{flips} binary flips")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
