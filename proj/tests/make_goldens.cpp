// Writes the renderer golden images. Run manually; review the outputs, then
// commit them under tests/data/golden/. Usage: mmsi_make_goldens <out_dir>
#include <filesystem>
#include <iostream>

#include "mmsi/image.hpp"
#include "mmsi/overlay.hpp"
#include "support/synthetic.hpp"

using namespace mmsi;

int main(int argc, char** argv) {
    const std::filesystem::path out_dir = argc > 1 ? argv[1] : "tests/data/golden";
    std::filesystem::create_directories(out_dir);

    Image canvas = Image::filled(640, 360, {32, 32, 32});
    Image overlay = render_overlay(canvas, testsupport::golden_two_person_frame(),
                                   assign_colors(6), OverlayOptions{});
    save_png(out_dir / "overlay_two_person.png", overlay);

    std::vector<Image> frames;
    const Rgb colors[6] = {{255, 0, 0},   {0, 255, 0},   {0, 0, 255},
                           {255, 255, 0}, {0, 255, 255}, {255, 0, 255}};
    for (int i = 0; i < 6; ++i) frames.push_back(Image::filled(320, 180, colors[i]));
    save_png(out_dir / "grid_solid.png", compose_grid(frames));

    std::cout << "wrote goldens to " << out_dir << "\n";
    return 0;
}
