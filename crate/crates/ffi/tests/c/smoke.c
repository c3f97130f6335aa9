#include <math.h>
#include <stdio.h>
#include <string.h>

#include "crnflux.h"

static const char *TRI =
    "species internal Y0 Y1 Y2\n"
    "species external X1=1.0 X2=1.0\n"
    "reaction R1: X1 + Y0 <-> Y1 ; kf=1 kr=2\n"
    "reaction R2: Y1 <-> Y2 ; kf=1 kr=2\n"
    "reaction R3: Y2 <-> X2 + Y0 ; kf=1 kr=2\n"
    "conserve Y0+Y1+Y2 = 1\n";

int main(void) {
    CrnfluxNetwork *net = NULL;
    CrnfluxAnalysis *a = NULL;
    if (crnflux_network_parse(TRI, &net) != CRNFLUX_STATUS_OK) {
        fprintf(stderr, "parse: %s\n", crnflux_last_error_message());
        return 1;
    }
    if (crnflux_analysis_new(net, 1.0, CRNFLUX_X_MODE_FALLING_FACTORIAL, 0, 0, &a) != CRNFLUX_STATUS_OK) {
        fprintf(stderr, "analysis: %s\n", crnflux_last_error_message());
        return 1;
    }
    size_t n = 0;
    crnflux_analysis_n_cycles(a, &n);
    double total = 0.0;
    for (size_t i = 0; i < n; i++) {
        double w = 0.0;
        crnflux_analysis_cycle_flux(a, i, &w);
        total += w;
    }
    printf("cycles=%zu total=%.12f\n", n, total);
    CrnfluxStatus bad = crnflux_analysis_cycle_flux(a, 99, NULL);
    crnflux_analysis_free(a);
    crnflux_network_free(net);
    /* 1/21 + 8/21 + 3 * 2/7 */
    return (n == 5 && fabs(total - 9.0 / 7.0) < 1e-12 && bad == CRNFLUX_STATUS_OUT_OF_RANGE) ? 0 : 1;
}
