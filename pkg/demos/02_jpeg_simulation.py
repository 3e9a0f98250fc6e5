"""Baseline JPEG round-trip simulation.

The codec path here skips entropy coding (lossless) and reproduces the
lossy part exactly: YCbCr conversion, 8x8 block DCT, and quantization
with Annex-K tables scaled by the IJG quality rule. Watch PSNR fall as
the quality factor drops.
"""

from modsr.degrade import jpeg_compress, psnr
from modsr.degrade.jpeg import scaled_qtable, QTABLE_LUMA
from modsr.images import save_image, synthetic_image

img = synthetic_image(21, 96)

print("quality   PSNR(dB)   luma q-table DC entry")
for q in (100, 95, 85, 75, 50, 30, 10):
    out = jpeg_compress(img, q)
    print(f"  {q:4d}    {psnr(out, img):7.2f}          {scaled_qtable(QTABLE_LUMA, q)[0, 0]:3.0f}")
    if q in (95, 30):
        save_image(out, f"demo_out_jpeg_q{q}.png")

print("\nblocking artifacts are visible in demo_out_jpeg_q30.png")
