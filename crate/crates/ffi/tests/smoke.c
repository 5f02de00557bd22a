#include <math.h>
#include <stdio.h>

#include "houghfit.h"

int main(void) {
    double xs[] = {-1.0, 0.0, 0.5, 1.0, 2.0};
    double ys[] = {1.0, 2.0, 2.5, 3.0, 4.0};
    HfDataset *ds = NULL;
    if (hf_dataset_new(xs, ys, 5, &ds) != HF_STATUS_OK) {
        printf("dataset: %s\n", hf_last_error());
        return 1;
    }
    HfGrid grid = {-3.0, 3.0, -3.0, 3.0, 61, 61};
    HfFit *fit = NULL;
    if (hf_fit(ds, HF_METHOD_HT, &grid, 0.2, &fit) != HF_STATUS_OK) {
        printf("fit: %s\n", hf_last_error());
        return 1;
    }
    double a = 0.0, b = 0.0;
    hf_fit_theta(fit, &a, &b);
    printf("theta = (%f, %f)\n", a, b);
    int ok = fabs(a - 1.0) < 0.11 && fabs(b - 2.0) < 0.11;

    HfBreakdown bd;
    ok = ok && hf_breakdown_points(10, 7, &bd) == HF_STATUS_OK && bd.add_num == 3 && bd.add_den == 8;
    ok = ok && hf_fit(ds, HF_METHOD_HT, &grid, -1.0, &fit) == HF_STATUS_INVALID_ARGUMENT;

    hf_fit_free(fit);
    hf_dataset_free(ds);
    return ok ? 0 : 1;
}
