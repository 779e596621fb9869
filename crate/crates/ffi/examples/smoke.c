/* Minimal C client: reference designs, range, and error reporting. */
#include <math.h>
#include <stdio.h>

#include "lidar_range.h"

int main(void) {
    LrScenario *apd = NULL, *sipm = NULL;
    if (lr_scenario_table1(LR_DETECTOR_APD, &apd) != LR_STATUS_OK) return 1;
    if (lr_scenario_table1(LR_DETECTOR_SIPM, &sipm) != LR_STATUS_OK) return 1;

    LrRangeResult ra, rs;
    if (lr_max_range(apd, &ra) != LR_STATUS_OK) return 2;
    if (lr_max_range(sipm, &rs) != LR_STATUS_OK) return 2;
    printf("apd %.3f m\nsipm %.3f m\n", ra.r_max_m, rs.r_max_m);
    if (!(ra.r_max_m > rs.r_max_m)) return 3;

    double snr = 0.0;
    if (lr_snr_at_range(apd, -5.0, &snr) != LR_STATUS_INVALID_ARGUMENT) return 4;
    char msg[128];
    size_t n = lr_last_error_message(msg, sizeof msg);
    if (n == 0) return 5;
    printf("error: %s\n", msg);

    if (!(lr_false_alarm_prob(5.0) < 3e-7)) return 6;
    if (fabs(lr_correct_detection_prob(5.0, 4e-6, 100e6, 0.5) - 0.99977) > 1e-5) return 7;

    lr_scenario_free(apd);
    lr_scenario_free(sipm);
    return 0;
}
