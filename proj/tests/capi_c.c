/* Copyright 2026 The advdet Authors */
/* */
/* Licensed under the Apache License, Version 2.0 (the "License"); */
/* you may not use this file except in compliance with the License. */
/* You may obtain a copy of the License at */
/* */
/*     http://www.apache.org/licenses/LICENSE-2.0 */
/* */
/* Unless required by applicable law or agreed to in writing, software */
/* distributed under the License is distributed on an "AS IS" BASIS, */
/* WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied. */
/* See the License for the specific language governing permissions and */
/* limitations under the License. */

/* Compiles the public header as C and makes a few calls. */

#include <stdio.h>

#include "advdet/advdet.h"

int main(void) {
  const double x[4] = {0.0, 0.5, -0.5, 0.0};
  advdet_signal* s = NULL;
  double rms = 0.0;
  if (advdet_signal_create(x, 4, ADVDET_SAMPLE_RATE, &s) != ADVDET_OK) return 1;
  if (advdet_signal_rms(s, &rms) != ADVDET_OK || rms <= 0.35 || rms >= 0.36) return 1;
  advdet_signal_free(s);
  if (advdet_signal_create(NULL, 4, ADVDET_SAMPLE_RATE, &s) != ADVDET_E_INVALID_ARGUMENT) return 1;
  printf("advdet %s: %s\n", advdet_version(), advdet_status_name(ADVDET_E_INVALID_ARGUMENT));
  return 0;
}
