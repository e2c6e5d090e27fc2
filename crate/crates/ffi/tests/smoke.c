#include <math.h>
#include <stdio.h>
#include <string.h>

#include "aucmix.h"

#define CHECK(call)                                                        \
    do {                                                                   \
        int rc_ = (call);                                                  \
        if (rc_ != AUCMIX_OK) {                                            \
            fprintf(stderr, "%s failed (%d): %s\n", #call, rc_,            \
                    aucmix_last_error());                                  \
            return 1;                                                      \
        }                                                                  \
    } while (0)

int main(void) {
    double h[4] = {0.9, 0.1, 0.4, 0.4};
    uint8_t y[4] = {1, 0, 1, 0};
    double auc = 0.0;
    CHECK(aucmix_auc(h, y, 4, &auc));
    if (fabs(auc - 0.875) > 1e-15) return 2;

    double soft[4] = {1.0, 0.0, 0.5, 0.25};
    AucmixAux opt;
    CHECK(aucmix_optimal_aux(h, soft, 4, 1.0, &opt));
    double v = 0.0;
    CHECK(aucmix_auc_mixup_value(h, soft, 4, &opt, &v));
    if (!(v >= 0.0) || !(opt.alpha >= 0.0)) return 3;

    size_t dims[3] = {2, 3, 1};
    AucmixModel *m = NULL;
    CHECK(aucmix_model_new(dims, 3, AUCMIX_ACTIVATION_RELU, true, 5, &m));
    double x[4] = {0.5, -0.5, 1.0, 2.0};
    double s[2];
    CHECK(aucmix_model_forward(m, x, 2, 2, s));
    if (!(s[0] > 0.0 && s[0] < 1.0)) return 4;
    aucmix_model_free(m);

    AucmixDataset *ds = NULL;
    CHECK(aucmix_dataset_synthetic(300, 4, 0.1, 3.0, 1.0, 2, &ds));
    AucmixTrainOptions opts;
    CHECK(aucmix_train_options_default(AUCMIX_METHOD_AUCM, &opts));
    opts.epochs = 5;
    AucmixTrainSummary sum;
    CHECK(aucmix_train(ds, &opts, &m, &sum));
    aucmix_model_free(m);
    aucmix_dataset_free(ds);

    if (aucmix_model_new(dims, 3, 99, false, 0, &m) != AUCMIX_ERR_INVALID_ARGUMENT) return 5;
    if (strstr(aucmix_last_error(), "activation") == NULL) return 6;

    printf("ok %s test_auc=%.4f\n", aucmix_version(), sum.test_auc);
    return 0;
}
