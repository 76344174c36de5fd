#include <math.h>
#include <stdio.h>
#include "fastsdr.h"

#define T 2000
#define L 16

int main(void) {
    static double refs[2 * T], ests[2 * T];
    unsigned state = 12345u;
    for (int i = 0; i < 2 * T; i++) {
        state = state * 1103515245u + 12345u;
        refs[i] = ((double)(state >> 8) / (double)(1u << 24)) - 0.5;
    }
    /* Swapped channels with a little crosstalk. */
    for (int t = 0; t < T; t++) {
        ests[t] = refs[T + t] + 0.05 * refs[t];
        ests[T + t] = refs[t] + 0.05 * refs[T + t];
    }

    FastsdrConfig *cfg = fastsdr_config_new();
    if (fastsdr_config_set_filter_length(cfg, L) != FASTSDR_STATUS_OK) return 10;
    if (fastsdr_config_set_solver(cfg, FASTSDR_SOLVER_DIRECT) != FASTSDR_STATUS_OK) return 11;

    FastsdrResult *res = NULL;
    FastsdrStatus st = fastsdr_bss_eval(cfg, refs, 2, ests, 2, T, &res);
    if (st != FASTSDR_STATUS_OK) {
        fprintf(stderr, "%s\n", fastsdr_last_error_message());
        return 12;
    }
    double sdr[4];
    int64_t perm[2];
    if (fastsdr_result_sdr(res, sdr, 4) != FASTSDR_STATUS_OK) return 13;
    if (fastsdr_result_permutation(res, perm, 2) != FASTSDR_STATUS_OK) return 14;
    if (perm[0] != 1 || perm[1] != 0) return 15;
    if (!(sdr[1] > 20.0 && sdr[2] > 20.0 && sdr[0] < 0.0)) return 16;
    printf("%.17g %.17g %.17g %.17g\n", sdr[0], sdr[1], sdr[2], sdr[3]);

    if (fastsdr_bss_eval(cfg, NULL, 2, ests, 2, T, &res) != FASTSDR_STATUS_NULL_POINTER) return 17;
    if (fastsdr_last_error_message() == NULL) return 18;

    fastsdr_result_free(res);
    fastsdr_config_free(cfg);
    return 0;
}
