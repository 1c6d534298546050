#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "proxyad/image.hpp"
#include "proxyad/phantom.hpp"

using namespace proxyad;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("proxyad_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

GrayscaleImage ramp_image(int h, int w) {
  GrayscaleImage img(h, w);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      img.at(r, c) = static_cast<double>(r * w + c) / (h * w - 1);
    }
  }
  return img;
}

}  // namespace

TEST_CASE("png 8-bit round trip hits the rescale endpoints") {
  const fs::path dir = temp_dir("png8");
  GrayscaleImage img(16, 16);
  img.at(0, 0) = 1.0;   // 255
  img.at(0, 1) = 0.0;   // 0
  img.at(0, 2) = 0.5;
  write_png_gray8((dir / "a.png").string(), img);
  const GrayscaleImage back = read_png_gray((dir / "a.png").string());
  CHECK(back.height == 16);
  CHECK(back.at(0, 0) == doctest::Approx(1.0));          // 255 -> 1.0
  CHECK(back.at(0, 1) == doctest::Approx(0.0));
  CHECK(back.at(0, 2) == doctest::Approx(128.0 / 255.0).epsilon(1e-9));  // round(0.5*255)
}

TEST_CASE("png 16-bit value 32768 reads as 32768/65535") {
  const fs::path dir = temp_dir("png16");
  GrayscaleImage img(16, 16);
  img.at(3, 4) = 32768.0 / 65535.0;
  write_png_gray16((dir / "a.png").string(), img);
  const GrayscaleImage back = read_png_gray((dir / "a.png").string());
  CHECK(back.at(3, 4) == doctest::Approx(32768.0 / 65535.0).epsilon(1e-12));
  CHECK(back.at(3, 4) == doctest::Approx(0.50001).epsilon(1e-4));
}

TEST_CASE("png 16-bit round trip is exact on the 16-bit grid") {
  const fs::path dir = temp_dir("png16rt");
  GrayscaleImage img(16, 16);
  for (int r = 0; r < 16; ++r) {
    for (int c = 0; c < 16; ++c) {
      img.at(r, c) = static_cast<double>((r * 16 + c) * 257 % 65536) / 65535.0;
    }
  }
  write_png_gray16((dir / "a.png").string(), img);
  const GrayscaleImage back = read_png_gray((dir / "a.png").string());
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    CHECK(back.pixels[i] == doctest::Approx(img.pixels[i]).epsilon(1e-12));
  }
}

TEST_CASE("corrupt png raises a data error naming the file") {
  const fs::path dir = temp_dir("corrupt");
  std::ofstream((dir / "bad.png").string()) << "this is not a png";
  CHECK_THROWS_AS(read_png_gray((dir / "bad.png").string()), DataError);
  try {
    read_png_gray((dir / "bad.png").string());
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("bad.png") != std::string::npos);
  }
}

TEST_CASE("dataset loading: layout, ordering, masks") {
  const fs::path root = temp_dir("dataset");
  const GrayscaleImage img = ramp_image(16, 16);
  fs::create_directories(root / "train" / "normal");
  fs::create_directories(root / "test" / "normal");
  fs::create_directories(root / "test" / "abnormal");
  write_png_gray8((root / "train" / "normal" / "b.png").string(), img);
  write_png_gray8((root / "train" / "normal" / "a.png").string(), img);
  write_png_gray8((root / "test" / "normal" / "n0.png").string(), img);
  write_png_gray8((root / "test" / "abnormal" / "x.png").string(), img);
  GrayscaleImage mask(16, 16);
  mask.at(5, 5) = 1.0;
  write_png_gray8((root / "test" / "abnormal" / "x_mask.png").string(), mask);

  const auto train = load_dataset(root.string(), "train");
  REQUIRE(train.size() == 2);
  CHECK(train[0].id == "normal/a");  // lexicographic
  CHECK(train[1].id == "normal/b");

  const auto test = load_dataset(root.string(), "test");
  REQUIRE(test.size() == 2);
  CHECK(test[0].label == Label::normal);
  CHECK(test[1].label == Label::abnormal);
  REQUIRE(test[1].lesion_mask.has_value());
  CHECK(test[1].lesion_mask->count_positive() == 1);
  CHECK(test[1].lesion_mask->at(5, 5) == 1);
}

TEST_CASE("empty train/normal dir errors with 'no training images'") {
  const fs::path root = temp_dir("empty");
  fs::create_directories(root / "train" / "normal");
  try {
    load_dataset(root.string(), "train");
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("no training images") != std::string::npos);
  }
}

TEST_CASE("missing split directory errors") {
  const fs::path root = temp_dir("missing");
  fs::create_directories(root);
  CHECK_THROWS_AS(load_dataset(root.string(), "train"), DataError);
}

TEST_CASE("export/load round trip preserves labels and masks") {
  const fs::path root = temp_dir("export");
  PhantomSpec spec;
  spec.image_size = 32;
  spec.n_train_normal = 2;
  spec.n_test_normal = 2;
  spec.n_test_abnormal = 2;
  spec.lesion_radius_min = 3;
  spec.lesion_radius_max = 6;
  spec.seed = 7;
  const PhantomSet set = generate_phantoms(spec);
  export_dataset(root.string(), "train", set.train);
  export_dataset(root.string(), "test", set.test);

  const auto test = load_dataset(root.string(), "test");
  REQUIRE(test.size() == 4);
  int masks = 0;
  for (const auto& sample : test) {
    if (sample.lesion_mask) ++masks;
  }
  CHECK(masks == 2);
}

TEST_CASE("phantom generation is a pure function of the spec") {
  PhantomSpec spec;
  spec.image_size = 32;
  spec.n_train_normal = 3;
  spec.n_test_normal = 2;
  spec.n_test_abnormal = 2;
  spec.lesion_radius_min = 3;
  spec.lesion_radius_max = 6;
  spec.seed = 99;
  const PhantomSet a = generate_phantoms(spec);
  const PhantomSet b = generate_phantoms(spec);
  REQUIRE(a.train.size() == b.train.size());
  for (std::size_t i = 0; i < a.train.size(); ++i) {
    CHECK(a.train[i].image.pixels == b.train[i].image.pixels);
  }
  for (std::size_t i = 0; i < a.test.size(); ++i) {
    CHECK(a.test[i].image.pixels == b.test[i].image.pixels);
  }
}

TEST_CASE("all phantom intensities are finite and in [0,1]") {
  PhantomSpec spec;
  spec.image_size = 48;
  spec.n_train_normal = 4;
  spec.n_test_normal = 2;
  spec.n_test_abnormal = 4;
  spec.noise_sigma = 0.1;  // force clipping
  spec.seed = 3;
  const PhantomSet set = generate_phantoms(spec);
  for (const auto& group : {set.train, set.test}) {
    for (const auto& sample : group) {
      CHECK_NOTHROW(validate_dataset_image(sample.image, sample.id));
    }
  }
}

TEST_CASE("zero-noise fixed-contrast lesion shifts the interior by exactly 0.4") {
  PhantomSpec spec;
  spec.image_size = 64;
  spec.noise_sigma = 0.0;
  spec.lesion_contrast_min = 0.4;
  spec.lesion_contrast_max = 0.4;
  spec.lesion_radius_min = 6;
  spec.lesion_radius_max = 10;
  spec.seed = 11;
  const PhantomPair pair = phantom_abnormal(spec, 0);
  REQUIRE(pair.mask.count_positive() > 0);

  double mean_in = 0.0, mean_base = 0.0;
  int count = 0;
  for (int r = 0; r < spec.image_size; ++r) {
    for (int c = 0; c < spec.image_size; ++c) {
      if (pair.mask.at(r, c)) {
        mean_in += pair.abnormal.at(r, c);
        mean_base += pair.normal.at(r, c);
        ++count;
      }
    }
  }
  mean_in /= count;
  mean_base /= count;
  CHECK(mean_in - mean_base == doctest::Approx(0.4).epsilon(1e-6));
}

TEST_CASE("abnormal equals its paired normal exactly outside the mask") {
  PhantomSpec spec;
  spec.image_size = 64;
  spec.noise_sigma = 0.05;
  spec.seed = 21;
  for (int index = 0; index < 3; ++index) {
    const PhantomPair pair = phantom_abnormal(spec, index);
    for (int r = 0; r < spec.image_size; ++r) {
      for (int c = 0; c < spec.image_size; ++c) {
        if (!pair.mask.at(r, c)) {
          REQUIRE(pair.abnormal.at(r, c) == pair.normal.at(r, c));
        }
      }
    }
  }
}

TEST_CASE("requested number of abnormal samples all carry non-empty masks") {
  PhantomSpec spec;
  spec.image_size = 48;
  spec.n_train_normal = 1;
  spec.n_test_normal = 1;
  spec.n_test_abnormal = 50;
  spec.lesion_radius_min = 3;
  spec.lesion_radius_max = 8;
  spec.seed = 5;
  const PhantomSet set = generate_phantoms(spec);
  int with_mask = 0;
  for (const auto& sample : set.test) {
    if (sample.lesion_mask && sample.lesion_mask->count_positive() > 0) ++with_mask;
  }
  CHECK(with_mask == 50);
}

TEST_CASE("oversized lesion is a spec error") {
  PhantomSpec spec;
  spec.image_size = 16;
  spec.lesion_radius_min = 7;
  spec.lesion_radius_max = 12;
  CHECK_THROWS_AS(validate_phantom_spec(spec), ConfigError);
}
