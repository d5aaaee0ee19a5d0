"""Pure-numpy versions of the Monte-Carlo kernels."""

import numpy as np


def respond(psi, frame, pick_max):
    """Index of the frame vector with the smallest (or largest) overlap with each row of `psi`.

    Ties go to the smallest index.
    """
    psi = np.asarray(psi, dtype=np.complex128)
    frame = np.asarray(frame, dtype=np.complex128)
    d = psi.shape[1]
    if frame.shape != (d, d):
        raise ValueError("frame must be a d x d matrix matching psi")
    amp = psi @ frame.conj()
    ov = amp.real**2 + amp.imag**2
    idx = np.argmax(ov, axis=1) if pick_max else np.argmin(ov, axis=1)
    return idx.astype(np.intp)


def accumulate_outer(psi, labels, n_labels):
    """Per-label sums of |psi><psi|, of its squared moduli, and label counts."""
    psi = np.asarray(psi, dtype=np.complex128)
    labels = np.asarray(labels, dtype=np.intp)
    n, d = psi.shape
    if labels.shape != (n,):
        raise ValueError("labels must have one entry per sample")
    if n and (labels.min() < 0 or labels.max() >= n_labels):
        raise ValueError("label out of range")
    counts = np.bincount(labels, minlength=n_labels).astype(np.int64)
    sums = np.zeros((n_labels, d, d), dtype=np.complex128)
    sq = np.zeros((n_labels, d, d), dtype=np.float64)
    mod2 = psi.real**2 + psi.imag**2
    for j in range(d):
        for k in range(d):
            x = psi[:, j] * psi[:, k].conj()
            sums[:, j, k] = np.bincount(labels, weights=x.real, minlength=n_labels) + 1j * np.bincount(
                labels, weights=x.imag, minlength=n_labels
            )
            sq[:, j, k] = np.bincount(labels, weights=mod2[:, j] * mod2[:, k], minlength=n_labels)
    return sums, sq, counts
