#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace {

namespace fs = std::filesystem;

const char* cli_path() { return JECL_CLI_PATH; }

fs::path scratch_dir() {
    const auto dir = fs::temp_directory_path() / "jecl_cli_test";
    fs::create_directories(dir);
    return dir;
}

int run(const std::string& args, std::string* output = nullptr) {
    const fs::path log = scratch_dir() / "last_output.txt";
    const std::string cmd =
        std::string(cli_path()) + " " + args + " > " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    if (output) {
        std::ifstream in(log);
        std::stringstream ss;
        ss << in.rdbuf();
        *output = ss.str();
    }
    return status;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const std::string kQuickNet =
    " --hidden 16 --embedding-dim 4 --layerwise-epochs 3 --finetune-epochs 6 --max-epochs 12";

}  // namespace

TEST_CASE("synth then cluster then eval round-trips through files") {
    const fs::path dir = scratch_dir() / "flow";
    fs::create_directories(dir);
    REQUIRE(run("synth --k 3 --per-cluster 30 --image-dim 6 --text-dim 6 --separation 25 "
                "--noise 1 --seed 4 --output-dir " + (dir / "data").string()) == 0);
    REQUIRE(fs::exists(dir / "data/images.txt"));
    REQUIRE(fs::exists(dir / "data/mask.txt"));

    std::string out;
    REQUIRE(run("cluster --images " + (dir / "data/images.txt").string() + " --texts " +
                    (dir / "data/texts.txt").string() + " --labels " +
                    (dir / "data/labels.txt").string() + " --k 3 --seed 4 --output-dir " +
                    (dir / "run").string() + kQuickNet,
                &out) == 0);
    CHECK(out.find("pretraining now") != std::string::npos);  // implicit pretraining is logged
    CHECK(out.find("ACC") != std::string::npos);
    REQUIRE(fs::exists(dir / "run/assignments.txt"));
    REQUIRE(fs::exists(dir / "run/report.json"));
    REQUIRE(fs::exists(dir / "run/embeddings_image.txt"));
    REQUIRE(fs::exists(dir / "run/progress.jsonl"));

    REQUIRE(run("eval --pred " + (dir / "run/assignments.txt").string() + " --truth " +
                    (dir / "data/labels.txt").string(),
                &out) == 0);
    CHECK(out.find("ACC") != std::string::npos);
}

TEST_CASE("eval of the truth against itself prints perfect scores") {
    const fs::path dir = scratch_dir();
    {
        std::ofstream labels(dir / "truth.txt");
        labels << "0\n0\n1\n1\n2\n";
    }
    std::string out;
    REQUIRE(run("eval --pred " + (dir / "truth.txt").string() + " --truth " +
                    (dir / "truth.txt").string(),
                &out) == 0);
    CHECK(out.find("ACC 1.000000") != std::string::npos);
    CHECK(out.find("NMI 1.000000") != std::string::npos);
    CHECK(out.find("ARI 1.000000") != std::string::npos);
}

TEST_CASE("identical seeds give byte-identical assignments and reports") {
    const fs::path dir = scratch_dir() / "determinism";
    fs::create_directories(dir);
    REQUIRE(run("synth --k 2 --per-cluster 25 --image-dim 5 --text-dim 5 --separation 10 "
                "--noise 1 --missing-rate 0.2 --seed 8 --output-dir " +
                (dir / "data").string()) == 0);
    const std::string common =
        "cluster --images " + (dir / "data/images.txt").string() + " --texts " +
        (dir / "data/texts.txt").string() + " --mask " + (dir / "data/mask.txt").string() +
        " --k 2 --seed 8" + kQuickNet;
    REQUIRE(run(common + " --output-dir " + (dir / "a").string()) == 0);
    REQUIRE(run(common + " --output-dir " + (dir / "b").string()) == 0);
    CHECK(slurp(dir / "a/assignments.txt") == slurp(dir / "b/assignments.txt"));
    CHECK(slurp(dir / "a/report.json") == slurp(dir / "b/report.json"));
    CHECK(slurp(dir / "a/embeddings_text.txt") == slurp(dir / "b/embeddings_text.txt"));
}

TEST_CASE("pretrained checkpoints are accepted by cluster") {
    const fs::path dir = scratch_dir() / "checkpoints";
    fs::create_directories(dir);
    REQUIRE(run("synth --k 2 --per-cluster 20 --image-dim 5 --text-dim 5 --separation 15 "
                "--noise 1 --seed 3 --output-dir " + (dir / "data").string()) == 0);
    REQUIRE(run("pretrain --images " + (dir / "data/images.txt").string() + " --texts " +
                (dir / "data/texts.txt").string() +
                " --hidden 16 --embedding-dim 4 --layerwise-epochs 3 --finetune-epochs 6"
                " --seed 3 --output-dir " + (dir / "ckpt").string()) == 0);
    REQUIRE(fs::exists(dir / "ckpt/encoder_image.bin"));

    std::string out;
    REQUIRE(run("cluster --images " + (dir / "data/images.txt").string() + " --texts " +
                    (dir / "data/texts.txt").string() + " --labels " +
                    (dir / "data/labels.txt").string() + " --checkpoint-dir " +
                    (dir / "ckpt").string() + " --k 2 --seed 3 --output-dir " +
                    (dir / "run").string() + kQuickNet,
                &out) == 0);
    CHECK(out.find("pretraining now") == std::string::npos);
}

TEST_CASE("the single-view baseline runs from the same files") {
    const fs::path dir = scratch_dir() / "single";
    fs::create_directories(dir);
    REQUIRE(run("synth --k 2 --per-cluster 20 --image-dim 5 --text-dim 5 --separation 20 "
                "--noise 1 --seed 5 --output-dir " + (dir / "data").string()) == 0);
    std::string out;
    REQUIRE(run("cluster --images " + (dir / "data/images.txt").string() + " --texts " +
                    (dir / "data/texts.txt").string() + " --labels " +
                    (dir / "data/labels.txt").string() +
                    " --single-view image --k 2 --gamma 0 --beta 0 --seed 5 --output-dir " +
                    (dir / "run").string() + kQuickNet,
                &out) == 0);
    CHECK(out.find("ACC") != std::string::npos);
    CHECK(fs::exists(dir / "run/embeddings_image.txt"));
    CHECK_FALSE(fs::exists(dir / "run/embeddings_text.txt"));
}

TEST_CASE("unknown flags and missing inputs exit non-zero") {
    std::string out;
    CHECK(run("cluster --definitely-not-a-flag 1", &out) != 0);
    CHECK(run("eval --pred /nonexistent/p.txt --truth /nonexistent/t.txt", &out) != 0);
    CHECK(out.find("error") != std::string::npos);
    CHECK(run("", &out) != 0);  // a subcommand is required
}

TEST_CASE("sweep runs from a JSON spec and writes reports") {
    const fs::path dir = scratch_dir() / "sweep";
    fs::create_directories(dir);
    {
        std::ofstream spec(dir / "spec.json");
        spec << R"({
          "dataset": {"synthetic": {"k": 2, "per_cluster_n": 15, "image_dim": 5,
                       "text_dim": 5, "separation": 18.0, "view_noise": 1.0}},
          "pipeline": {"k": 2, "hidden_dims": [16], "embedding_dim": 4,
                       "layerwise_epochs": 3, "finetune_epochs": 5,
                       "max_epochs": 8, "seed": 11},
          "sweep": {"axis": "lambda", "values": [0.5]},
          "trials": 2
        })";
    }
    std::string out;
    REQUIRE(run("sweep --config " + (dir / "spec.json").string() + " --output-dir " +
                    (dir / "out").string(),
                &out) == 0);
    CHECK(fs::exists(dir / "out/report.json"));
    CHECK(fs::exists(dir / "out/report.txt"));
    CHECK(out.find("lambda=0.5") != std::string::npos);
}
