/*
 * Minimal C consumer of the shapestress C ABI.
 *
 * Build (from the repository root, after `cargo build -p shapestress-capi`):
 *
 *   cc crates/capi/examples/demo.c \
 *      -Icrates/capi/include \
 *      target/debug/libshapestress_capi.a \
 *      -lm -lpthread -ldl -o demo
 *
 * Linking the static archive by path avoids accidentally picking up the
 * cdylib; to use the shared library instead, link -lshapestress_capi and
 * add target/debug to the runtime library path.
 *
 * The program registers a scaled square onto the original, estimates a
 * mean shape from rotated copies, fits an affine thin-plate spline, and
 * scores band depths, printing one line per step.
 */

#include <shapestress.h>

#include <math.h>
#include <stdio.h>
#include <stdlib.h>

static void check(SsStatus status, const char *what) {
  if (status != SS_STATUS_OK) {
    char message[256];
    ss_last_error_message(message, sizeof message);
    fprintf(stderr, "%s failed (status %d): %s\n", what, (int)status, message);
    exit(1);
  }
}

int main(void) {
  printf("shapestress %s\n", ss_version());

  /* A unit square and the same square scaled by 3 and shifted. */
  const double square[8] = {0, 0, 1, 0, 1, 1, 0, 1};
  double moved[8];
  for (int i = 0; i < 4; i++) {
    moved[2 * i] = 3.0 * square[2 * i] + 2.0;
    moved[2 * i + 1] = 3.0 * square[2 * i + 1] - 5.0;
  }

  SsConfig *source = NULL;
  SsConfig *target = NULL;
  check(ss_config_new(square, 4, 2, &source), "ss_config_new(source)");
  check(ss_config_new(moved, 4, 2, &target), "ss_config_new(target)");

  double rotation[4], translation[2], scale, residual;
  check(ss_align(source, target, true, rotation, translation, &scale, &residual),
        "ss_align");
  printf("align: scale=%.6f translation=(%.3f, %.3f) residual=%.2e\n", scale,
         translation[0], translation[1], residual);

  /* Mean shape of five rotated copies of the square: svar collapses. */
  SsConfig *copies[5];
  const SsConfig *copy_ptrs[5];
  for (int r = 0; r < 5; r++) {
    double theta = 2.0 * M_PI * r / 5.0, rotated[8];
    for (int i = 0; i < 4; i++) {
      double x = square[2 * i], y = square[2 * i + 1];
      rotated[2 * i] = x * cos(theta) - y * sin(theta);
      rotated[2 * i + 1] = x * sin(theta) + y * cos(theta);
    }
    check(ss_config_new(rotated, 4, 2, &copies[r]), "ss_config_new(copy)");
    copy_ptrs[r] = copies[r];
  }
  SsMeanShape *mean = NULL;
  check(ss_gpa_mean(copy_ptrs, 5, 0.0, 0, &mean), "ss_gpa_mean");
  printf("gpa: svar=%.2e iterations=%zu converged=%d\n", ss_mean_shape_svar(mean),
         ss_mean_shape_iterations(mean), (int)ss_mean_shape_converged(mean));

  /* An affine warp bends nothing. */
  SsTps *tps = NULL;
  check(ss_tps_fit(source, target, &tps), "ss_tps_fit");
  double ix, iy;
  check(ss_tps_evaluate(tps, 0.5, 0.5, &ix, &iy), "ss_tps_evaluate");
  printf("tps: bending=%.2e centre image=(%.3f, %.3f)\n",
         ss_tps_bending_energy(tps), ix, iy);

  /* Band depth ranks the middle constant curve deepest. */
  const double curves[12] = {0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2, 2};
  double depths[3];
  check(ss_band_depths(curves, 3, 4, depths), "ss_band_depths");
  printf("band depths: %.4f %.4f %.4f\n", depths[0], depths[1], depths[2]);

  ss_tps_free(tps);
  ss_mean_shape_free(mean);
  for (int r = 0; r < 5; r++) {
    ss_config_free(copies[r]);
  }
  ss_config_free(target);
  ss_config_free(source);
  printf("ok\n");
  return 0;
}
