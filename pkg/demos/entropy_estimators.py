"""
Entropy estimators on a window of errors
========================================

The information potential of a batch of errors, its quantized version and
the resulting Renyi entropy. Quantization merges nearby errors into a small
codebook and barely changes the estimate.
"""
import numpy as np

from gmee import GGDKernel, generalized_ip, quantize, quantized_ip, renyi_entropy

rng = np.random.default_rng(0)
errors = np.concatenate([rng.normal(0, 0.3, 30), [4.0, -5.0]])
kernel = GGDKernel(alpha=2.0, beta=1.0)

ip = generalized_ip(errors, kernel)
print(f"information potential {ip:.5f}, Renyi entropy {renyi_entropy(ip):.4f}")

for gamma in (0.0, 0.1, 0.5):
    book = quantize(errors, gamma)
    print(f"gamma={gamma}: {len(book.centers)} code words, quantized IP {quantized_ip(errors, book, kernel):.5f}")
