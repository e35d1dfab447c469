// Writes a synthetic photograph/painting pair for trying the `coi pipeline` command:
// the painting is a rotated, scaled and shifted copy of the photograph with a few
// strokes added.
#include <cstdio>
#include <filesystem>
#include <string>

#include "coi/image_io.hpp"
#include "coi/synthetic.hpp"

int main(int argc, char** argv) {
  const std::string dir = argc > 1 ? argv[1] : ".";
  std::filesystem::create_directories(dir);
  const int n = 320;
  const coi::GrayImage photo = coi::synthetic::smooth_scene(n, n, 11);

  coi::SimilarityTransform t;
  t.theta = 0.08;
  t.scale = 1.06;
  t.tx = 7.0;
  t.ty = -5.0;
  coi::GrayImage painting = coi::apply_transform(photo, t, n, n);
  coi::synthetic::paint_rect(painting, 60, 70, 130, 90, 0.05);
  coi::synthetic::paint_rect(painting, 200, 180, 230, 260, 0.95);
  coi::synthetic::paint_rect(painting, 250, 40, 256, 46, 0.0);

  coi::save_gray(photo, dir + "/photograph.png");
  coi::save_gray(painting, dir + "/painting.png");
  std::printf("wrote %s/photograph.png and %s/painting.png\n", dir.c_str(), dir.c_str());
  return 0;
}
