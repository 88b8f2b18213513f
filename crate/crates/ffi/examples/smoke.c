#include <stdio.h>
#include "earthquake.h"

int main(void) {
    const double atoms[] = {0.3, 2.0, 1.5, 2.5, 4.0, 0.7};
    EqLamination *lam = NULL;
    EqCircleMap *map = NULL;
    EqLamination *back = NULL;
    size_t n = 0;
    if (eq_lamination_from_atoms(atoms, 2, &lam) != EQ_STATUS_OK) goto fail;
    if (eq_earthquake_boundary(lam, &map) != EQ_STATUS_OK) goto fail;
    if (eq_recover_measure(map, &back) != EQ_STATUS_OK) goto fail;
    eq_lamination_len(back, &n);
    for (size_t i = 0; i < n; i++) {
        double a[3];
        eq_lamination_atom(back, i, a);
        printf("atom %zu: (%.12f, %.12f) weight %.12f\n", i, a[0], a[1], a[2]);
    }
    eq_lamination_free(back);
    eq_circle_map_free(map);
    eq_lamination_free(lam);
    return 0;
fail: {
        char msg[256];
        eq_last_error_message(msg, sizeof msg);
        fprintf(stderr, "error: %s\n", msg);
        return 1;
    }
}
