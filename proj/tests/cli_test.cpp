#include "gesture/cli.hpp"
#include "gesture/io.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <sstream>

namespace gesture {
namespace {

namespace fs = std::filesystem;
using testing::slurp;
using testing::TempDir;

struct Outcome {
  int code = 0;
  std::string out;
  std::string err;
};

Outcome gesture(const std::vector<std::string>& args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

int count_lines(const std::string& text, const std::string& prefix = "") {
  std::istringstream in(text);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) n += line.rfind(prefix, 0) == 0;
  return n;
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(gesture({}).code, 1);
  EXPECT_EQ(gesture({"dance"}).code, 1);
  EXPECT_EQ(gesture({"synth"}).code, 1);
  EXPECT_EQ(gesture({"train", "--input", "x"}).code, 1);
  EXPECT_EQ(gesture({"train", "--input", "x", "--model", "m", "--cov-mode", "spherical"}).code, 1);
  EXPECT_EQ(gesture({"train", "--input", "x", "--model", "m", "--tol", "0"}).code, 1);
  EXPECT_EQ(gesture({"train", "--input", "x", "--model", "m", "--k", "0"}).code, 1);
  EXPECT_EQ(gesture({"synth", "--output", "x", "--frames", "1"}).code, 1);
  EXPECT_EQ(gesture({"synth", "--output", "x", "--seed", "abc"}).code, 1);
}

TEST(Cli, HelpSucceeds) {
  const Outcome r = gesture({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("synth"), std::string::npos);
}

TEST(Cli, DataErrors) {
  TempDir dir("cli_data");
  EXPECT_EQ(gesture({"train", "--input", (dir / "missing").string(), "--model", (dir / "m").string()}).code, 2);
  std::ofstream(dir / "bad.csv") << "lm,var_x,var_y,var_z,source_id,label\n0,1,2\n";
  EXPECT_EQ(gesture({"train", "--input", (dir / "bad.csv").string(), "--model", (dir / "m").string()}).code, 2);
  std::ofstream(dir / "bad.model") << "gesture-gmm-model v9\n";
  const Outcome r = gesture({"classify", "--input", (dir / "bad.csv").string(), "--model", (dir / "bad.model").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("version"), std::string::npos);
  fs::create_directories(dir / "empty");
  EXPECT_EQ(gesture({"train", "--input", (dir / "empty").string(), "--model", (dir / "m").string()}).code, 2);
}

TEST(Cli, DegenerateDataWithoutRidgeIsNumericalFailure) {
  TempDir dir("cli_num");
  std::vector<FeatureMatrix> same{FeatureMatrix(LandmarkTable::Constant(0.1), "a", "wave"),
                                  FeatureMatrix(LandmarkTable::Constant(0.1), "b", "push")};
  write_feature_csv(same, dir / "flat.csv");
  const Outcome r = gesture({"train", "--input", (dir / "flat.csv").string(), "--model", (dir / "m").string(),
                         "--reg-eps", "0"});
  EXPECT_EQ(r.code, 3);
  EXPECT_FALSE(fs::exists(dir / "m"));
}

TEST(Cli, SynthTrainClassifyScore) {
  TempDir dir("cli_flow");
  const std::string data = (dir / "data").string();
  const std::string model = (dir / "model.txt").string();
  Outcome r = gesture({"synth", "--output", data, "--seed", "5", "--videos-per-profile", "3", "--frames", "60"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "videos=12\nprofiles=4\nframes=60\nseed=5\n");
  const std::string manifest = slurp(dir / "data" / "manifest.csv");
  EXPECT_EQ(count_lines(manifest), 13);
  EXPECT_NE(manifest.find("stack_0006.lmk,stack_0006,stack,60"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "data" / "push_0011.lmk"));

  r = gesture({"train", "--input", data, "--model", model, "--output", (dir / "out").string(), "--seed", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("videos=12\nrows=252\nk=4\n"), std::string::npos);
  EXPECT_EQ(count_lines(r.out, "cluster."), 8);
  EXPECT_EQ(count_lines(slurp(dir / "out" / "features.csv")), 1 + 252);
  EXPECT_EQ(count_lines(slurp(dir / "out" / "plot_before.csv")), 1 + 252);
  EXPECT_EQ(count_lines(slurp(dir / "out" / "plot_after.csv")), 1 + 252);

  r = gesture({"classify", "--input", data, "--model", model, "--output", (dir / "records.csv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(count_lines(slurp(dir / "records.csv")), 12);
  EXPECT_EQ(count_lines(r.out, "# accuracy="), 1);
  EXPECT_EQ(count_lines(r.out, "# task "), 12);
  EXPECT_NE(r.out.find("# task wave_0000 -> "), std::string::npos);
  EXPECT_NE(r.err.find("timing:"), std::string::npos);

  r = gesture({"score", "--input", data, "--model", model});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("points=252\n"), std::string::npos);
  EXPECT_NE(r.out.find("overall="), std::string::npos);
}

TEST(Cli, TrainingFromExportedCsvReproducesModel) {
  TempDir dir("cli_csv");
  const std::string data = (dir / "data").string();
  ASSERT_EQ(gesture({"synth", "--output", data, "--videos-per-profile", "2", "--frames", "40"}).code, 0);
  ASSERT_EQ(gesture({"train", "--input", data, "--model", (dir / "a.model").string(), "--output",
                     (dir / "out").string()})
                .code,
            0);
  ASSERT_EQ(gesture({"train", "--input", (dir / "out" / "features.csv").string(), "--model",
                     (dir / "b.model").string()})
                .code,
            0);
  EXPECT_EQ(slurp(dir / "a.model"), slurp(dir / "b.model"));
}

TEST(Cli, KMismatchWarns) {
  TempDir dir("cli_k");
  const std::string data = (dir / "data").string();
  ASSERT_EQ(gesture({"synth", "--output", data, "--videos-per-profile", "2", "--frames", "40"}).code, 0);
  const Outcome r = gesture({"train", "--input", data, "--model", (dir / "m").string(), "--k", "5"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("warning"), std::string::npos);
  EXPECT_NE(r.out.find("k=5\n"), std::string::npos);
}

TEST(Cli, SameSeedsGiveIdenticalBytes) {
  TempDir dir("cli_det");
  std::string outputs[2];
  for (int i = 0; i < 2; ++i) {
    const std::string tag = std::to_string(i);
    const std::string data = (dir / ("data" + tag)).string();
    const std::string model = (dir / ("model" + tag)).string();
    Outcome s = gesture({"synth", "--output", data, "--seed", "9", "--videos-per-profile", "2", "--frames", "50"});
    Outcome t = gesture({"train", "--input", data, "--model", model, "--seed", "4"});
    Outcome c = gesture({"classify", "--input", data, "--model", model});
    ASSERT_EQ(s.code + t.code + c.code, 0);
    outputs[i] = s.out + t.out + c.out + slurp(model);
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(data)) files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& file : files) outputs[i] += file.filename().string() + slurp(file);
  }
  EXPECT_EQ(outputs[0].size(), outputs[1].size());
  EXPECT_TRUE(outputs[0] == outputs[1]);
}

TEST(Cli, TaskActions) {
  EXPECT_EQ(cli::task_action("pick"), "robot: pick object");
  EXPECT_EQ(cli::task_action("juggle"), "robot: task 'juggle'");
}

}  // namespace
}  // namespace gesture
