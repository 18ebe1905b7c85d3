#include "fedmt/fl.hpp"

#include <algorithm>
#include <exception>
#include <mutex>
#include <thread>

#include "fedmt/errors.hpp"

namespace fedmt {

namespace {

void check_keys(const ParameterSet& got, const std::vector<std::string>& expected,
                const std::string& context) {
    std::vector<std::string> want = expected;
    std::sort(want.begin(), want.end());
    const std::vector<std::string> have = got.names();  // map order = sorted
    if (have != want) {
        throw ProtocolError(context + ": parameter keys do not match the expected block");
    }
}

}  // namespace

LocalRoundResult local_round(NodeState& node, const ParameterSet& global_rep,
                             const LabeledImageSet& train, ComputationGraph& graph,
                             const FederationConfig& cfg, uint32_t round_index) {
    check_keys(global_rep, node.local_params.partition.representation_keys,
               "node " + node.node_id + " round " + std::to_string(round_index));
    node.local_params = merge(node.local_params, global_rep);

    TrainOptions opts;
    opts.sgd = cfg.sgd;
    opts.batch_size = cfg.batch_size;
    opts.experiment_seed = cfg.experiment_seed;
    opts.shuffle_scope = node.node_id;

    EpochResult res = train_epochs(graph, node.local_params, train, opts,
                                   round_index * node.epochs_per_round, node.epochs_per_round);
    node.local_params = std::move(res.params);

    LocalRoundResult out;
    out.representation = split(node.local_params, Block::representation);
    out.sample_count = node.sample_count;
    out.mean_loss = res.mean_loss;
    return out;
}

ParameterSet fedavg_aggregate(const std::vector<std::pair<ParameterSet, uint64_t>>& updates,
                              Weighting weighting) {
    if (updates.empty()) throw DomainError("fedavg_aggregate: no updates");
    uint64_t total = 0;
    for (const auto& [params, count] : updates) {
        if (count == 0) throw ProtocolError("fedavg_aggregate: zero sample count");
        total += count;
    }
    const std::vector<std::string> keys = updates.front().first.names();
    for (const auto& [params, count] : updates) {
        if (params.names() != keys) {
            throw ProtocolError("fedavg_aggregate: updates disagree on parameter keys");
        }
    }

    ParameterSet out = updates.front().first;
    for (const std::string& key : keys) {
        const Tensor& first = updates.front().first.at(key);
        Tensor& dst = out.entries.at(key);
        std::vector<double> acc(first.size(), 0.0);
        for (const auto& [params, count] : updates) {
            const Tensor& t = params.at(key);
            if (!t.same_dims(first)) {
                throw ProtocolError("fedavg_aggregate: dims mismatch for '" + key + "'");
            }
            const double w = weighting == Weighting::samples
                                 ? static_cast<double>(count) / static_cast<double>(total)
                                 : 1.0 / static_cast<double>(updates.size());
            for (std::size_t i = 0; i < t.size(); ++i) {
                acc[i] += w * static_cast<double>(t[i]);
            }
        }
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = static_cast<float>(acc[i]);
    }
    return out;
}

namespace {

struct RoundLog {
    std::mutex mu;
    std::vector<RoundLogEntry> entries;

    void add(uint32_t round, const std::string& node, double loss) {
        std::lock_guard lock(mu);
        entries.push_back({round, node, loss});
    }
};

// Node-side protocol loop; runs on its own thread for either transport.
void run_node(Channel& ch, NodeState& node, const LabeledImageSet& train,
              const ModelSpec& spec, const FederationConfig& cfg, RoundLog& log) {
    ComputationGraph graph = build_graph(spec);

    wire::RoundMessage join;
    join.kind = wire::MsgKind::join_request;
    join.sender_id = node.node_id;
    send_message(ch, join);
    const wire::RoundMessage ack = recv_message(ch);
    if (ack.kind != wire::MsgKind::join_ack) {
        throw ProtocolError("node " + node.node_id + ": expected join-ack, got " +
                            wire::msg_kind_name(ack.kind));
    }

    for (;;) {
        const wire::RoundMessage msg = recv_message(ch);
        switch (msg.kind) {
            case wire::MsgKind::global_params: {
                ParameterSet rep = wire::decode_params(msg.payload);
                LocalRoundResult res =
                    local_round(node, rep, train, graph, cfg, msg.round_index);
                log.add(msg.round_index, node.node_id, res.mean_loss);

                wire::RoundMessage update;
                update.kind = wire::MsgKind::local_update;
                update.round_index = msg.round_index;
                update.sender_id = node.node_id;
                update.payload = wire::encode_params(res.representation);
                update.sample_count = res.sample_count;
                send_message(ch, update);
                break;
            }
            case wire::MsgKind::head_request: {
                wire::RoundMessage head;
                head.kind = wire::MsgKind::head_upload;
                head.round_index = msg.round_index;
                head.sender_id = node.node_id;
                head.payload = wire::encode_params(split(node.local_params, Block::task));
                head.sample_count = node.sample_count;
                send_message(ch, head);
                break;
            }
            case wire::MsgKind::shutdown:
                return;
            default:
                throw ProtocolError("node " + node.node_id + ": unexpected " +
                                    wire::msg_kind_name(msg.kind));
        }
    }
}

wire::RoundMessage server_recv(Channel& ch, const std::string& node_id,
                               wire::MsgKind expected, uint32_t round) {
    wire::RoundMessage msg;
    try {
        msg = recv_message(ch);
    } catch (const std::exception& e) {
        throw ProtocolError("node " + node_id + " failed mid-round " + std::to_string(round) +
                            ": " + e.what());
    }
    if (msg.kind != expected) {
        throw ProtocolError("node " + node_id + ": expected " + wire::msg_kind_name(expected) +
                            ", got " + wire::msg_kind_name(msg.kind));
    }
    return msg;
}

}  // namespace

FederationResult run_federation(std::vector<NodeState> nodes,
                                const std::vector<LabeledImageSet>& train_sets,
                                const ModelSpec& spec, const FederationConfig& cfg) {
    if (nodes.empty()) throw DomainError("run_federation: need at least one node");
    if (nodes.size() != train_sets.size()) {
        throw DomainError("run_federation: node/dataset count mismatch");
    }
    const BlockPartition partition = nodes.front().local_params.partition;
    for (const NodeState& n : nodes) {
        if (n.local_params.partition.representation_keys != partition.representation_keys ||
            n.local_params.partition.task_keys != partition.task_keys) {
            throw ProtocolError("run_federation: nodes disagree on the block partition");
        }
    }

    auto trace = std::make_shared<MessageTrace>();
    std::vector<std::unique_ptr<Channel>> server_channels(nodes.size());
    std::vector<std::unique_ptr<Channel>> node_channels(nodes.size());
    std::unique_ptr<TcpListener> listener;
    if (cfg.transport == TransportKind::stream) {
        listener = std::make_unique<TcpListener>();
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            node_channels[i] = tcp_connect(listener->port());
            server_channels[i] = trace_channel(listener->accept(), trace);
        }
    } else {
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            ChannelPair pair = make_in_process_pair();
            server_channels[i] = trace_channel(std::move(pair.server_side), trace);
            node_channels[i] = std::move(pair.node_side);
        }
    }

    RoundLog log;
    std::vector<std::exception_ptr> node_errors(nodes.size());
    std::vector<std::thread> threads;
    threads.reserve(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        threads.emplace_back([&, i] {
            try {
                run_node(*node_channels[i], nodes[i], train_sets[i], spec, cfg, log);
            } catch (...) {
                node_errors[i] = std::current_exception();
                node_channels[i]->close();
            }
        });
    }

    FederationResult result;
    result.trace = trace;
    try {
        // registration
        std::vector<std::string> ids(nodes.size());
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            const wire::RoundMessage join = server_recv(*server_channels[i], nodes[i].node_id,
                                                        wire::MsgKind::join_request, 0);
            ids[i] = join.sender_id;
            wire::RoundMessage ack;
            ack.kind = wire::MsgKind::join_ack;
            send_message(*server_channels[i], ack);
        }

        ParameterSet global_rep = split(nodes.front().local_params, Block::representation);
        for (uint32_t round = 0; round < cfg.total_rounds; ++round) {
            const std::vector<uint8_t> payload = wire::encode_params(global_rep);
            for (std::size_t i = 0; i < nodes.size(); ++i) {
                wire::RoundMessage bcast;
                bcast.kind = wire::MsgKind::global_params;
                bcast.round_index = round;
                bcast.sender_id = "server";
                bcast.payload = payload;
                send_message(*server_channels[i], bcast);
            }
            // synchronous barrier: aggregation waits for every registered node
            std::vector<std::pair<ParameterSet, uint64_t>> updates;
            updates.reserve(nodes.size());
            for (std::size_t i = 0; i < nodes.size(); ++i) {
                const wire::RoundMessage up = server_recv(*server_channels[i], ids[i],
                                                          wire::MsgKind::local_update, round);
                if (up.round_index != round) {
                    throw ProtocolError("node " + ids[i] + " answered round " +
                                        std::to_string(up.round_index) + " during round " +
                                        std::to_string(round));
                }
                ParameterSet rep = wire::decode_params(up.payload);
                check_keys(rep, partition.representation_keys, "update from " + ids[i]);
                updates.emplace_back(std::move(rep), up.sample_count);
            }
            ParameterSet aggregated = fedavg_aggregate(updates, cfg.weighting);
            global_rep.entries = std::move(aggregated.entries);
        }

        result.model.shared_representation = global_rep;
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            wire::RoundMessage req;
            req.kind = wire::MsgKind::head_request;
            req.round_index = cfg.total_rounds;
            req.sender_id = "server";
            send_message(*server_channels[i], req);
            const wire::RoundMessage head = server_recv(*server_channels[i], ids[i],
                                                        wire::MsgKind::head_upload,
                                                        cfg.total_rounds);
            ParameterSet task = wire::decode_params(head.payload);
            check_keys(task, partition.task_keys, "head from " + ids[i]);
            result.model.task_heads.emplace(nodes[i].task_name, std::move(task));
        }
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            wire::RoundMessage bye;
            bye.kind = wire::MsgKind::shutdown;
            bye.sender_id = "server";
            send_message(*server_channels[i], bye);
        }
    } catch (...) {
        for (auto& ch : server_channels) ch->close();
        for (auto& ch : node_channels) ch->close();
        for (auto& t : threads) t.join();
        throw;
    }

    for (auto& t : threads) t.join();
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (node_errors[i]) std::rethrow_exception(node_errors[i]);
    }

    // deterministic round-log order: by (round, node index)
    std::map<std::string, std::size_t> node_order;
    for (std::size_t i = 0; i < nodes.size(); ++i) node_order[nodes[i].node_id] = i;
    std::sort(log.entries.begin(), log.entries.end(),
              [&](const RoundLogEntry& a, const RoundLogEntry& b) {
                  if (a.round != b.round) return a.round < b.round;
                  return node_order[a.node_id] < node_order[b.node_id];
              });
    result.round_log = std::move(log.entries);
    for (NodeState& n : nodes) result.final_node_params.push_back(std::move(n.local_params));
    return result;
}

}  // namespace fedmt
