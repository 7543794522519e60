#include "latalign/model/checkpoint.hpp"

#include <filesystem>
#include <fstream>

#include "test_util.hpp"

using namespace latalign;
using namespace latalign::test;
namespace fs = std::filesystem;

TEST(Checkpoint, RoundTripPreservesScores) {
  for (AlignmentMode mode : {AlignmentMode::PlainBn, AlignmentMode::Latent}) {
    ModelSpec s = ModelSpec::defaults(Architecture::EegNet, 4, 64, 3, 64.0);
    s.alignment_mode = mode;
    const auto m = build_model(s, 8);
    ForwardOptions train;
    train.training = true;
    m->forward(random_tensor({8, 4, 64}, 1), train);
    const fs::path path = fs::temp_directory_path() / "latalign_ckpt_rt.ckpt";
    save_checkpoint(path, *m, {{"fold", 3}, {"method", "latent"}});
    const LoadedCheckpoint loaded = load_checkpoint(path);
    fs::remove(path);
    EXPECT_EQ(loaded.metadata["fold"], 3);
    EXPECT_EQ(nlohmann::json(loaded.model->spec()), nlohmann::json(m->spec()));
    const Tensor x = random_tensor({5, 4, 64}, 2);
    EXPECT_EQ(max_abs_difference(m->forward(x, ForwardOptions{}).scores, loaded.model->forward(x, ForwardOptions{}).scores),
              0.0);
    const auto a = m->alignment_layers();
    const auto b = loaded.model->alignment_layers();
    for (std::size_t i = 0; i < a.size(); ++i) {
      ASSERT_EQ(a[i]->running_stats().has_value(), b[i]->running_stats().has_value());
      if (a[i]->running_stats()) EXPECT_EQ(a[i]->running_stats()->std, b[i]->running_stats()->std);
    }
  }
}

TEST(Checkpoint, RejectsCorruptFiles) {
  const fs::path path = fs::temp_directory_path() / "latalign_ckpt_bad.ckpt";
  std::ofstream(path, std::ios::binary) << "NOTACHECKPOINTFILE";
  EXPECT_ERROR_CODE(load_checkpoint(path), ErrorCode::MalformedHeader);

  const auto m = build_model(ModelSpec::defaults(Architecture::EegNet, 4, 64, 3, 64.0), 1);
  save_checkpoint(path, *m);
  fs::resize_file(path, fs::file_size(path) - 16);
  EXPECT_ERROR_CODE(load_checkpoint(path), ErrorCode::TruncatedRecord);
  fs::remove(path);
  EXPECT_ERROR_CODE(load_checkpoint(path), ErrorCode::Io);
}
