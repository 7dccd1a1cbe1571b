#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "aed/checkpoint.hpp"
#include "aed/errors.hpp"
#include "aed/rng.hpp"

using namespace aed;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() : path(fs::temp_directory_path() / "aed_ckpt_test") { fs::create_directories(path); }
    ~TempDir() { fs::remove_all(path); }
};

CaeParams trained_micro_cae(StreamKind kind, std::uint64_t seed) {
    CaeParams p = make_cae(kind, seed, 8, {2, 2, 3});
    Rng rng(seed + 1);
    std::vector<CaeBatchItem> normal(2);
    std::vector<Tensor> pseudo(2, Tensor({8, 8, p.in_channels()}));
    for (CaeBatchItem& item : normal) {
        item.input = Tensor({8, 8, p.in_channels()});
        for (double& v : item.input.data) v = rng.uniform(0.0, 1.0);
        if (kind == StreamKind::Appearance) {
            item.seg_truth = Tensor({8, 8, 1});
            for (double& v : item.seg_truth->data) v = rng.uniform(0.0, 1.0) < 0.5 ? 0.0 : 1.0;
        }
    }
    for (Tensor& x : pseudo)
        for (double& v : x.data) v = rng.uniform(0.0, 1.0);
    // a couple of steps so the Adam moments are non-trivial
    for (int i = 0; i < 2; ++i) cae_train_step(p, normal, pseudo, TrainHyper{});
    return p;
}

std::vector<char> read_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::vector<char>((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
}

void write_bytes(const fs::path& p, const std::vector<char>& bytes) {
    std::ofstream out(p, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_CASE("cae checkpoints round trip bit-identically including optimizer state") {
    TempDir dir;
    const CaeParams p = trained_micro_cae(StreamKind::Appearance, 7);
    io::save_checkpoint(io::pack_cae(p), 0xabcdULL, dir.path / "cae.ckpt");
    std::uint64_t hash = 0;
    const io::NamedTensors loaded = io::load_checkpoint(dir.path / "cae.ckpt", &hash);
    CHECK(hash == 0xabcdULL);
    const CaeParams q = io::unpack_cae(loaded);

    CHECK(q.kind == p.kind);
    CHECK(q.input_size == p.input_size);
    CHECK(q.encoder_widths == p.encoder_widths);
    REQUIRE(q.seg_decoder.has_value());
    for (int l = 0; l < 3; ++l) {
        CHECK(q.encoder[l].kernels.data == p.encoder[l].kernels.data);
        CHECK(q.encoder[l].bias.data == p.encoder[l].bias.data);
        CHECK(q.encoder[l].kernels_state.first_moment.data ==
              p.encoder[l].kernels_state.first_moment.data);
        CHECK(q.encoder[l].kernels_state.second_moment.data ==
              p.encoder[l].kernels_state.second_moment.data);
        CHECK(q.encoder[l].kernels_state.step_count == p.encoder[l].kernels_state.step_count);
        CHECK(q.main_decoder[l].kernels.data == p.main_decoder[l].kernels.data);
        CHECK(q.adv_decoder[l].kernels.data == p.adv_decoder[l].kernels.data);
        CHECK((*q.seg_decoder)[l].bias.data == (*p.seg_decoder)[l].bias.data);
        CHECK((*q.seg_decoder)[l].bias_state.second_moment.data ==
              (*p.seg_decoder)[l].bias_state.second_moment.data);
    }

    // further training continues identically from the restored state
    CaeParams a = p, b = q;
    Rng rng(9);
    std::vector<CaeBatchItem> normal(1);
    normal[0].input = Tensor({8, 8, 1});
    normal[0].seg_truth = Tensor({8, 8, 1});
    for (double& v : normal[0].input.data) v = rng.uniform(0.0, 1.0);
    std::vector<Tensor> pseudo(1, Tensor({8, 8, 1}));
    for (double& v : pseudo[0].data) v = rng.uniform(0.0, 1.0);
    const CaeStepReport ra = cae_train_step(a, normal, pseudo, TrainHyper{});
    const CaeStepReport rb = cae_train_step(b, normal, pseudo, TrainHyper{});
    CHECK(ra.rec_loss == rb.rec_loss);
    CHECK(a.encoder[0].kernels.data == b.encoder[0].kernels.data);
}

TEST_CASE("classifier checkpoints round trip bit-identically") {
    TempDir dir;
    ClfParams p = make_clf(StreamKind::MotionForward, 3, 32, {2, 2, 3, 2, 2}, DiffMode::Signed);
    Rng rng(4);
    std::vector<ClfSample> batch(4);
    for (int i = 0; i < 4; ++i) {
        batch[i].diff = Tensor({32, 32, 2});
        batch[i].latent = Tensor({4, 4, 3});
        for (double& v : batch[i].diff.data) v = rng.uniform(-0.5, 0.5);
        for (double& v : batch[i].latent.data) v = rng.uniform(0.0, 1.0);
        batch[i].label = i % 2;
    }
    clf_train_step(p, batch, ClfHyper{});

    io::save_checkpoint(io::pack_clf(p), 1ULL, dir.path / "clf.ckpt");
    const ClfParams q = io::unpack_clf(io::load_checkpoint(dir.path / "clf.ckpt"));
    CHECK(q.kind == p.kind);
    CHECK(q.diff_mode == DiffMode::Signed);
    CHECK(q.conv_widths == p.conv_widths);
    for (int l = 0; l < 5; ++l) {
        CHECK(q.convs[l].kernels.data == p.convs[l].kernels.data);
        CHECK(q.convs[l].kernels_state.first_moment.data ==
              p.convs[l].kernels_state.first_moment.data);
    }
    CHECK(q.fc_weights.data == p.fc_weights.data);
    CHECK(q.fc_bias.data == p.fc_bias.data);
    CHECK(q.fc_weights_state.second_moment.data == p.fc_weights_state.second_moment.data);
    CHECK(q.fc_weights_state.step_count == p.fc_weights_state.step_count);

    CHECK(clf_forward(p, batch[0].diff, batch[0].latent).normal ==
          clf_forward(q, batch[0].diff, batch[0].latent).normal);
}

TEST_CASE("frozen checkpoints drop the training-only branches") {
    TempDir dir;
    const CaeParams p = trained_micro_cae(StreamKind::MotionBackward, 11);
    io::save_checkpoint(io::pack_cae(p), 2ULL, dir.path / "full.ckpt");
    io::save_checkpoint(io::pack_frozen_cae(strip_for_inference(p)), 2ULL,
                        dir.path / "frozen.ckpt");
    CHECK(fs::file_size(dir.path / "frozen.ckpt") < fs::file_size(dir.path / "full.ckpt"));

    const FrozenCae f = io::unpack_frozen_cae(io::load_checkpoint(dir.path / "frozen.ckpt"));
    CHECK(f.kind == p.kind);
    Tensor x({8, 8, 2});
    Rng rng(12);
    for (double& v : x.data) v = rng.uniform(0.0, 1.0);
    const FrozenForward a = frozen_forward(strip_for_inference(p), x);
    const FrozenForward b = frozen_forward(f, x);
    CHECK(a.main_recon.data == b.main_recon.data);
    CHECK(a.latent.data == b.latent.data);
}

TEST_CASE("corrupted checkpoint files are rejected") {
    TempDir dir;
    const CaeParams p = trained_micro_cae(StreamKind::Appearance, 1);
    const fs::path good = dir.path / "good.ckpt";
    io::save_checkpoint(io::pack_cae(p), 5ULL, good);
    const std::vector<char> bytes = read_bytes(good);
    REQUIRE(bytes.size() > 16);

    // tampered magic
    std::vector<char> bad_magic = bytes;
    bad_magic[0] = 'X';
    write_bytes(dir.path / "magic.ckpt", bad_magic);
    CHECK_THROWS_AS(io::load_checkpoint(dir.path / "magic.ckpt"), DataError);

    // unsupported format version
    std::vector<char> bad_version = bytes;
    bad_version[4] = 99;
    write_bytes(dir.path / "version.ckpt", bad_version);
    CHECK_THROWS_AS(io::load_checkpoint(dir.path / "version.ckpt"), DataError);

    // truncation in the middle of a tensor payload
    std::vector<char> truncated(bytes.begin(), bytes.begin() + bytes.size() / 2);
    write_bytes(dir.path / "trunc.ckpt", truncated);
    CHECK_THROWS_AS(io::load_checkpoint(dir.path / "trunc.ckpt"), DataError);

    // missing file
    CHECK_THROWS_AS(io::load_checkpoint(dir.path / "absent.ckpt"), DataError);
}

TEST_CASE("a checkpoint from one stream cannot be loaded as another") {
    TempDir dir;
    const CaeParams motion = trained_micro_cae(StreamKind::MotionForward, 21);
    io::NamedTensors packed = io::pack_cae(motion);
    // flip the declared stream kind to appearance; kernel shapes then disagree
    for (auto& [name, tensor] : packed.items)
        if (name == "meta") tensor.data[0] = 0.0;
    io::save_checkpoint(packed, 6ULL, dir.path / "cross.ckpt");
    CHECK_THROWS_AS(io::unpack_cae(io::load_checkpoint(dir.path / "cross.ckpt")), DataError);
}

TEST_CASE("named tensor lookup and atomic text writes") {
    io::NamedTensors t;
    t.add("a", Tensor({2, 2}, 1.5));
    CHECK(t.has("a"));
    CHECK_FALSE(t.has("b"));
    CHECK(t.get("a").data == std::vector<double>(4, 1.5));
    CHECK_THROWS_AS(t.get("b"), DataError);

    TempDir dir;
    const fs::path p = dir.path / "note.txt";
    io::atomic_write_text(p, "hello\n");
    io::atomic_write_text(p, "world\n");  // overwrite goes through the temp file
    std::ifstream in(p);
    std::string s;
    std::getline(in, s);
    CHECK(s == "world");
    CHECK_FALSE(fs::exists(p.string() + ".tmp"));
}

TEST_CASE("checkpoint files are byte-identical across repeated saves") {
    TempDir dir;
    const CaeParams p = trained_micro_cae(StreamKind::Appearance, 33);
    io::save_checkpoint(io::pack_cae(p), 7ULL, dir.path / "a.ckpt");
    io::save_checkpoint(io::pack_cae(p), 7ULL, dir.path / "b.ckpt");
    CHECK(read_bytes(dir.path / "a.ckpt") == read_bytes(dir.path / "b.ckpt"));
}
