#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <vector>

#include "melcmp/render.hpp"
#include "helpers.hpp"

using namespace melcmp;

namespace {

Spectrogram db_spec(std::size_t rows, std::size_t cols) {
    Spectrogram spec;
    spec.kind = SpecKind::linear;
    spec.scale = Scale::decibel;
    spec.values = Matrix(rows, cols);
    return spec;
}

}  // namespace

TEST_CASE("viridis colormap") {
    const auto& anchors = viridis_anchors();

    SECTION("endpoints hit the first and last anchors exactly") {
        REQUIRE(colormap_viridis(0.0) == anchors.front());
        REQUIRE(colormap_viridis(1.0) == anchors.back());
    }
    SECTION("out-of-range t clamps") {
        REQUIRE(colormap_viridis(-3.0) == anchors.front());
        REQUIRE(colormap_viridis(7.5) == anchors.back());
    }
    SECTION("midpoint between the first two anchors averages them") {
        const Rgb mid = colormap_viridis(0.5 / 15.0);
        REQUIRE(static_cast<int>(mid.r) == 70);  // (68 + 72) / 2
        REQUIRE(static_cast<int>(mid.g) == 14);  // lround(13.5)
        REQUIRE(static_cast<int>(mid.b) == 96);  // (84 + 108) / 2
    }
    SECTION("anchor positions reproduce anchor colors within rounding") {
        for (std::size_t k = 0; k < anchors.size(); ++k) {
            const Rgb c = colormap_viridis(static_cast<double>(k) / 15.0);
            REQUIRE(std::abs(static_cast<int>(c.r) - static_cast<int>(anchors[k].r)) <= 1);
            REQUIRE(std::abs(static_cast<int>(c.g) - static_cast<int>(anchors[k].g)) <= 1);
            REQUIRE(std::abs(static_cast<int>(c.b) - static_cast<int>(anchors[k].b)) <= 1);
        }
    }
}

TEST_CASE("render_spectrogram") {
    SECTION("constant matrix maps every cell to colormap(0.5)") {
        Spectrogram spec = db_spec(3, 4);
        for (double& v : spec.values.v) v = -17.0;
        const RasterImage img = render_spectrogram(spec, false);
        REQUIRE(img.width == 4);
        REQUIRE(img.height == 3);
        const Rgb want = colormap_viridis(0.5);
        for (const Rgb& px : img.pixels) REQUIRE(px == want);
    }
    SECTION("min and max map to the colormap endpoints") {
        Spectrogram spec = db_spec(2, 1);
        spec.values.at(0, 0) = -80.0;
        spec.values.at(1, 0) = 0.0;
        const RasterImage img = render_spectrogram(spec, false);
        REQUIRE(img.at(0, 0) == colormap_viridis(0.0));
        REQUIRE(img.at(0, 1) == colormap_viridis(1.0));
    }
    SECTION("flip_vertical puts row 0 on the bottom") {
        Spectrogram spec = db_spec(2, 1);
        spec.values.at(0, 0) = -80.0;
        spec.values.at(1, 0) = 0.0;
        const RasterImage img = render_spectrogram(spec, true);
        REQUIRE(img.at(0, 1) == colormap_viridis(0.0));
        REQUIRE(img.at(0, 0) == colormap_viridis(1.0));
    }
    SECTION("shape is preserved") {
        Spectrogram spec = db_spec(3, 3);
        SplitMix64 rng(5);
        for (double& v : spec.values.v) v = rng.next_double() * -80.0;
        const RasterImage img = render_spectrogram(spec, true);
        REQUIRE(img.width == 3);
        REQUIRE(img.height == 3);
        REQUIRE(img.pixels.size() == 9);
    }
    SECTION("normalization cancels constant shifts") {
        Spectrogram spec = db_spec(4, 5);
        SplitMix64 rng(11);
        for (double& v : spec.values.v) v = rng.next_double() * -60.0;
        Spectrogram shifted = spec;
        for (double& v : shifted.values.v) v += 12.5;
        const RasterImage a = render_spectrogram(spec, true);
        const RasterImage b = render_spectrogram(shifted, true);
        REQUIRE(a.pixels == b.pixels);
    }
    SECTION("empty spectrogram rejected") {
        Spectrogram spec;
        REQUIRE_THROWS_AS(render_spectrogram(spec, false), DomainError);
    }
}

TEST_CASE("ppm output") {
    const auto dir = testutil::fresh_dir("render_ppm");

    SECTION("1x1 white image byte layout") {
        RasterImage img;
        img.width = 1;
        img.height = 1;
        img.pixels = {{255, 255, 255}};
        const auto path = dir / "white.ppm";
        write_ppm(img, path.string());
        const auto bytes = testutil::read_bytes(path);
        const std::vector<std::uint8_t> want = {'P', '6', '\n', '1', ' ', '1', '\n',
                                                '2', '5', '5', '\n', 255, 255, 255};
        REQUIRE(bytes == want);
    }
    SECTION("empty image rejected") {
        RasterImage img;
        REQUIRE_THROWS_AS(write_ppm(img, (dir / "x.ppm").string()), DomainError);
    }
    SECTION("round trip through read_ppm") {
        Spectrogram spec = db_spec(6, 9);
        SplitMix64 rng(3);
        for (double& v : spec.values.v) v = rng.next_double() * -80.0;
        const RasterImage img = render_spectrogram(spec, true);
        const auto path = dir / "rt.ppm";
        write_ppm(img, path.string());
        const RasterImage back = read_ppm(path.string());
        REQUIRE(back.width == img.width);
        REQUIRE(back.height == img.height);
        REQUIRE(back.pixels == img.pixels);
    }
    SECTION("rendering is byte deterministic") {
        Spectrogram spec = db_spec(5, 7);
        SplitMix64 rng(8);
        for (double& v : spec.values.v) v = rng.next_double() * -40.0;
        const auto p1 = dir / "a.ppm";
        const auto p2 = dir / "b.ppm";
        write_ppm(render_spectrogram(spec, true), p1.string());
        write_ppm(render_spectrogram(spec, true), p2.string());
        REQUIRE(testutil::read_bytes(p1) == testutil::read_bytes(p2));
    }
    SECTION("corrupt ppm rejected") {
        const auto path = dir / "bad.ppm";
        testutil::write_text(path, "P5\n1 1\n255\nxyz");
        REQUIRE_THROWS_AS(read_ppm(path.string()), FormatError);
    }
}
