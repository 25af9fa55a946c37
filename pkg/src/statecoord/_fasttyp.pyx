# Robust-typicality scan kernels.
#
# A batch of codewords is tested against a joint law arranged as
# (context cell, symbol): codeword m is typical iff for every cell (c, a)
# |count_m(c, a) - n q(c, a)| <= eps * n * q(c, a),
# where count_m(c, a) = #{t : ctx[t] = c and codeword[m, t] = a}.
import numpy as np

cimport numpy as cnp

cnp.import_array()


def typical_mask(cnp.int32_t[:, ::1] codewords,
                 cnp.int32_t[::1] ctx,
                 cnp.float64_t[:, ::1] q,
                 double eps):
    cdef Py_ssize_t m_count = codewords.shape[0]
    cdef Py_ssize_t n = codewords.shape[1]
    cdef Py_ssize_t n_ctx = q.shape[0]
    cdef Py_ssize_t n_sym = q.shape[1]
    cdef Py_ssize_t m, t, c, a
    cdef double target, dev

    out_arr = np.zeros(m_count, dtype=np.uint8)
    counts_arr = np.zeros(n_ctx * n_sym, dtype=np.int64)
    cdef cnp.uint8_t[::1] out = out_arr
    cdef cnp.int64_t[::1] counts = counts_arr
    cdef int ok

    for m in range(m_count):
        for t in range(n_ctx * n_sym):
            counts[t] = 0
        for t in range(n):
            counts[ctx[t] * n_sym + codewords[m, t]] += 1
        ok = 1
        for c in range(n_ctx):
            for a in range(n_sym):
                target = n * q[c, a]
                dev = counts[c * n_sym + a] - target
                if dev < 0:
                    dev = -dev
                if dev > eps * target:
                    ok = 0
                    break
            if ok == 0:
                break
        out[m] = ok
    return out_arr
