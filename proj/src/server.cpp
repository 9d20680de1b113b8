#include "hapticbots/server.hpp"

#include <chrono>
#include <iostream>
#include <set>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

namespace hapticbots {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;
using nlohmann::json;

// ---------------------------------------------------------------------------
// SimSession

SimSession::SimSession(SessionOptions opts) : opts_(std::move(opts)) {
    if (opts_.robots < 1) throw std::invalid_argument("robot_count must be ≥ 1");
    scene_ = builtin_scene(opts_.scene);
    rebuild();
}

void SimSession::rebuild() {
    if (world_.tick > 0 || tick_offset_ > 0) tick_offset_ += world_.tick + 1;
    world_ = make_world(scene_, opts_.config, default_layout(opts_.robots, scene_.bounds()));
    step_budget_ = 0;
}

void SimSession::post_hand(const HandInput& hand) {
    std::lock_guard lock(mu_);
    hand_ = hand;
    hand_dirty_ = true;
}

void SimSession::clear_hand() {
    std::lock_guard lock(mu_);
    hand_.reset();
    hand_dirty_ = true;
}

void SimSession::post_control(ControlCommand cmd, ErrorFn on_error) {
    std::lock_guard lock(mu_);
    controls_.push_back({std::move(cmd), std::move(on_error)});
}

void SimSession::apply(const ControlCommand& c) {
    const json& a = c.args;
    auto robot_index = [&]() {
        const int id = a.at("robot").get<int>();
        if (id < 0 || id >= static_cast<int>(world_.robots.size()))
            throw std::out_of_range("no robot with id " + std::to_string(id));
        return static_cast<std::size_t>(id);
    };
    switch (c.action) {
    case ControlAction::Pause:
        paused_ = true;
        break;
    case ControlAction::Resume:
        paused_ = false;
        break;
    case ControlAction::Step:
        step_budget_ += a.value("ticks", 1);
        break;
    case ControlAction::Reset:
        rebuild();
        break;
    case ControlAction::LoadScene:
        scene_ = a.at("scene").is_string() ? builtin_scene(a.at("scene").get<std::string>())
                                            : scene_from_json(a.at("scene"));
        load_scene_into(world_, scene_);
        break;
    case ControlAction::SetRobots:
        opts_.robots = a.at("count").get<int>();
        set_robot_count(world_, opts_.robots);
        break;
    case ControlAction::Grasp: {
        const auto i = robot_index();
        world_.robots[i] = grasp(world_.robots[i], true);
        break;
    }
    case ControlAction::Place: {
        const auto i = robot_index();
        std::vector<Vec2> others;
        for (std::size_t k = 0; k < world_.robots.size(); ++k)
            if (k != i && !world_.robots[k].grasped) others.push_back(world_.robots[k].pos);
        world_.robots[i] = place(world_.robots[i], {a.at("x").get<double>(), a.at("y").get<double>()}, others,
                                 world_.scene.bounds(), world_.config.rvo.agent_radius);
        world_.force_resolve = true;
        break;
    }
    case ControlAction::Calibrate: {
        const auto& ce = a.at("center");
        const auto& co = a.at("corner");
        calibration_ = calibrate({ce[0].get<double>(), ce[1].get<double>()}, {co[0].get<double>(), co[1].get<double>()},
                                 world_.scene.bounds());
        break;
    }
    }
}

std::optional<WorldSnapshot> SimSession::step() {
    std::deque<PendingControl> controls;
    std::optional<HandInput> hand;
    bool hand_dirty = false;
    {
        std::lock_guard lock(mu_);
        controls.swap(controls_);
        hand = hand_;
        hand_dirty = hand_dirty_;
        hand_dirty_ = false;
    }
    for (const auto& pc : controls) {
        try {
            apply(pc.cmd);
        } catch (const std::exception& e) {
            if (pc.on_error) pc.on_error(std::string(to_string(pc.cmd.action)) + ": " + e.what());
        }
    }
    if (hand_dirty) {
        if (hand) {
            const Vec2 xy = hand->tracking_frame ? calibration_.apply(hand->pos.xy()) : hand->pos.xy();
            world_.finger = FingerSample{world_.time, {xy.x, xy.y, hand->pos.z}, FingerSource::Live};
        } else {
            world_.finger.reset();
        }
    }
    if (paused_ && step_budget_ == 0) return std::nullopt;
    if (paused_) --step_budget_;
    advance(world_);
    WorldSnapshot s = snapshot_of(world_, paused_);
    s.tick = stream_tick();
    return s;
}

// ---------------------------------------------------------------------------
// StreamServer

namespace {

class Connection;

}  // namespace

struct StreamServer::Impl {
    asio::io_context ioc;
    tcp::acceptor acceptor{ioc};
    Handler handler;
    std::thread io_thread;
    std::set<std::shared_ptr<Connection>> clients;  // io thread only
    std::atomic<std::size_t> client_count{0};
    bool running = false;

    void accept();
};

namespace {

class Connection : public std::enable_shared_from_this<Connection> {
public:
    Connection(tcp::socket socket, StreamServer::Impl& server) : ws_(std::move(socket)), server_(server) {}

    void start() {
        ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
        ws_.async_accept([self = shared_from_this()](beast::error_code ec) {
            if (ec) return self->close();
            self->server_.clients.insert(self);
            self->server_.client_count = self->server_.clients.size();
            self->read();
        });
    }

    // Newest-only slot.
    void offer(std::int64_t tick, std::shared_ptr<const std::string> frame) {
        if (tick <= latest_tick_) return;
        latest_tick_ = tick;
        latest_ = std::move(frame);
        pump();
    }

    void enqueue(std::shared_ptr<const std::string> msg) {
        if (queued_.size() >= 16) queued_.pop_front();
        queued_.push_back(std::move(msg));
        pump();
    }

    void close() {
        if (closed_) return;
        closed_ = true;
        server_.clients.erase(shared_from_this());
        server_.client_count = server_.clients.size();
        beast::error_code ignored;
        beast::get_lowest_layer(ws_).socket().close(ignored);
    }

private:
    void read() {
        ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
            if (ec) return self->close();
            const std::string text = beast::buffers_to_string(self->buffer_.data());
            self->buffer_.consume(self->buffer_.size());
            self->handle(text);
            self->read();
        });
    }

    void handle(const std::string& text) {
        std::weak_ptr<Connection> weak = shared_from_this();
        asio::io_context& ioc = server_.ioc;
        StreamServer::ReplyFn reply = [weak, &ioc](const StreamMessage& m) {
            auto msg = std::make_shared<const std::string>(encode(m));
            asio::post(ioc, [weak, msg] {
                if (auto c = weak.lock()) c->enqueue(msg);
            });
        };
        try {
            const StreamMessage m = decode(text);
            if (server_.handler) server_.handler(m, reply);
        } catch (const std::exception& e) {
            enqueue(std::make_shared<const std::string>(encode(error_message(latest_tick_ < 0 ? 0 : latest_tick_, e.what()))));
        }
    }

    void pump() {
        if (writing_ || closed_) return;
        if (!queued_.empty()) {
            current_ = queued_.front();
            queued_.pop_front();
        } else if (latest_ && latest_tick_ > sent_tick_) {
            current_ = latest_;
            sent_tick_ = latest_tick_;
        } else {
            return;
        }
        writing_ = true;
        ws_.text(true);
        ws_.async_write(asio::buffer(*current_), [self = shared_from_this()](beast::error_code ec, std::size_t) {
            self->writing_ = false;
            self->current_.reset();
            if (ec) return self->close();
            self->pump();
        });
    }

    websocket::stream<beast::tcp_stream> ws_;
    StreamServer::Impl& server_;
    beast::flat_buffer buffer_;
    std::shared_ptr<const std::string> latest_;
    std::shared_ptr<const std::string> current_;
    std::deque<std::shared_ptr<const std::string>> queued_;
    std::int64_t latest_tick_ = -1;
    std::int64_t sent_tick_ = -1;
    bool writing_ = false;
    bool closed_ = false;
};

}  // namespace

void StreamServer::Impl::accept() {
    acceptor.async_accept(asio::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
        if (ec) return;  // acceptor closed
        std::make_shared<Connection>(std::move(socket), *this)->start();
        accept();
    });
}

StreamServer::StreamServer(const std::string& address, unsigned short port, Handler handler)
    : impl_(std::make_unique<Impl>()) {
    impl_->handler = std::move(handler);
    const tcp::endpoint ep{asio::ip::make_address(address), port};
    impl_->acceptor.open(ep.protocol());
    impl_->acceptor.set_option(asio::socket_base::reuse_address(true));
    impl_->acceptor.bind(ep);
    impl_->acceptor.listen();
}

StreamServer::~StreamServer() { stop(); }

unsigned short StreamServer::port() const { return impl_->acceptor.local_endpoint().port(); }

void StreamServer::start() {
    if (impl_->running) return;
    impl_->running = true;
    impl_->accept();
    impl_->io_thread = std::thread([this] { impl_->ioc.run(); });
}

void StreamServer::stop() {
    if (!impl_ || !impl_->running) return;
    impl_->running = false;
    asio::post(impl_->ioc, [this] {
        beast::error_code ignored;
        impl_->acceptor.close(ignored);
        const auto clients = impl_->clients;
        for (const auto& c : clients) c->close();
    });
    // Give pending closes a moment, then stop the loop.
    asio::post(impl_->ioc, [this] { impl_->ioc.stop(); });
    if (impl_->io_thread.joinable()) impl_->io_thread.join();
}

void StreamServer::publish(std::int64_t tick, std::string frame) {
    auto shared = std::make_shared<const std::string>(std::move(frame));
    asio::post(impl_->ioc, [this, tick, shared] {
        for (const auto& c : impl_->clients) c->offer(tick, shared);
    });
}

void StreamServer::broadcast(std::string message) {
    auto shared = std::make_shared<const std::string>(std::move(message));
    asio::post(impl_->ioc, [this, shared] {
        for (const auto& c : impl_->clients) c->enqueue(shared);
    });
}

std::size_t StreamServer::client_count() const { return impl_->client_count.load(); }

// ---------------------------------------------------------------------------
// serve

int run_serve(const ServeOptions& opts, const std::atomic<bool>& stop,
              const std::function<void(unsigned short)>& on_ready) {
    SimSession session(opts.session);
    StreamServer server(opts.address, opts.port, [&session](const StreamMessage& m, const StreamServer::ReplyFn& reply) {
        const std::int64_t tick = m.tick;
        switch (m.type) {
        case MessageType::HandInput:
            if (m.payload.value("present", true))
                session.post_hand(parse_hand_input(m.payload));
            else
                session.clear_hand();
            break;
        case MessageType::Control:
            session.post_control(parse_control(m.payload),
                                 [reply, tick](const std::string& what) { reply(error_message(tick, what)); });
            break;
        default:
            throw StreamError("clients may send only hand_input and control messages");
        }
    });
    server.start();
    if (on_ready) on_ready(server.port());

    using clock = std::chrono::steady_clock;
    const auto period = std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(1.0 / opts.rate_hz));
    const auto metrics_every = std::max<std::int64_t>(1, std::llround(opts.metrics_period * opts.rate_hz));
    auto next = clock::now();
    std::int64_t frames = 0;
    while (!stop.load()) {
        if (auto snap = session.step()) {
            server.publish(snap->tick, encode(world_state_message(*snap)));
            if (++frames % metrics_every == 0)
                server.broadcast(encode(metrics_message(snap->tick, finalize_metrics(session.world()))));
        }
        next += period;
        const auto now = clock::now();
        if (next < now) next = now;  // drop missed slots instead of bursting
        std::this_thread::sleep_until(next);
    }
    server.stop();
    return 0;
}

}  // namespace hapticbots
