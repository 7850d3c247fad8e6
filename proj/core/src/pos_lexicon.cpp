#include "alanet/captions.hpp"

#include <cctype>

#include "alanet/errors.hpp"

namespace alanet {

namespace {

// Every word appears in exactly one class list; the constructor rejects
// duplicates. Ambiguous English words are pinned to their most common class.

const char* const kNouns[] = {
    // time
    "time", "year", "day", "night", "morning", "evening", "noon", "midnight", "week", "month",
    "hour", "minute", "moment", "season", "spring", "summer", "autumn", "winter", "decade",
    "century",
    // people
    "man", "woman", "child", "boy", "girl", "person", "people", "friend", "family", "mother",
    "father", "sister", "brother", "baby", "uncle", "aunt", "cousin", "grandmother",
    "grandfather", "neighbor", "teacher", "student", "doctor", "nurse", "farmer", "worker",
    "driver", "artist", "writer", "singer", "player", "coach", "judge", "lawyer", "soldier",
    "captain", "king", "queen", "prince", "princess", "guest", "host", "crowd", "team", "group",
    "club", "band", "pilot", "sailor", "chef", "baker", "hunter", "guardian", "stranger",
    // buildings and places
    "house", "home", "room", "kitchen", "bedroom", "bathroom", "cellar", "attic", "door",
    "window", "wall", "floor", "ceiling", "roof", "chimney", "stair", "hall", "garage", "garden",
    "yard", "fence", "gate", "path", "road", "street", "avenue", "lane", "bridge", "tunnel",
    "corner", "block", "city", "town", "village", "suburb", "country", "nation", "state",
    "region", "border", "map", "castle", "palace", "tower", "temple", "church", "chapel",
    "museum", "library", "theater", "cinema", "stadium", "arena", "hospital", "clinic",
    "pharmacy", "hotel", "inn", "restaurant", "cafe", "bakery", "salon", "gym", "pool",
    "playground", "zoo", "circus", "fair", "festival", "parade", "school", "office", "factory",
    "farm", "barn", "mill", "station", "airport", "port", "harbor", "dock", "shop", "market",
    "mall", "bank",
    // sky and weather
    "world", "earth", "moon", "sun", "star", "planet", "comet", "galaxy", "sky", "cloud", "rain",
    "snow", "wind", "storm", "thunder", "lightning", "rainbow", "fog", "mist", "ice", "frost",
    "fire", "flame", "smoke", "ash", "shadow", "sunrise", "sunset", "horizon", "climate",
    "weather",
    // water and land
    "water", "steam", "river", "stream", "brook", "lake", "pond", "sea", "ocean", "wave", "tide",
    "beach", "shore", "coast", "island", "mountain", "hill", "valley", "cliff", "cave", "rock",
    "stone", "pebble", "boulder", "sand", "soil", "mud", "dust", "clay", "desert", "oasis",
    "glacier", "volcano", "canyon", "swamp", "marsh",
    // plants
    "grass", "lawn", "field", "meadow", "prairie", "forest", "wood", "jungle", "tree", "branch",
    "trunk", "root", "leaf", "flower", "petal", "bud", "seed", "fruit", "berry", "bush", "hedge",
    "vine", "moss", "fern", "reed", "straw", "hay",
    // food
    "apple", "banana", "lemon", "grape", "peach", "pear", "plum", "cherry", "melon", "mango",
    "vegetable", "carrot", "potato", "tomato", "onion", "pepper", "bean", "pea", "corn", "rice",
    "wheat", "oat", "bread", "cake", "cookie", "pie", "soup", "salad", "meat", "beef", "pork",
    "chicken", "fish", "egg", "milk", "cheese", "butter", "cream", "sugar", "salt", "honey",
    "jam", "tea", "coffee", "juice", "wine", "beer", "meal", "breakfast", "lunch", "dinner",
    "supper", "snack", "feast", "flour", "dough", "sauce", "spice", "herb",
    // animals
    "animal", "dog", "puppy", "cat", "kitten", "horse", "pony", "cow", "calf", "bull", "sheep",
    "lamb", "goat", "pig", "rabbit", "mouse", "rat", "squirrel", "fox", "wolf", "bear", "deer",
    "moose", "lion", "tiger", "leopard", "elephant", "giraffe", "zebra", "camel", "monkey",
    "ape", "gorilla", "snake", "lizard", "frog", "toad", "turtle", "tortoise", "bird", "eagle",
    "hawk", "owl", "crow", "raven", "robin", "sparrow", "pigeon", "duck", "goose", "swan", "hen",
    "rooster", "turkey", "peacock", "parrot", "penguin", "insect", "bee", "wasp", "ant",
    "beetle", "butterfly", "moth", "spider", "worm", "snail", "slug", "crab", "lobster",
    "shrimp", "whale", "dolphin", "shark", "salmon", "trout", "herd", "flock", "nest", "burrow",
    "den", "hive", "web", "paw", "hoof", "mane", "feather", "claw", "beak", "shell", "scale",
    // body
    "body", "head", "face", "eye", "ear", "nose", "mouth", "lip", "tooth", "teeth", "tongue",
    "chin", "cheek", "brow", "neck", "throat", "shoulder", "arm", "elbow", "wrist", "hand",
    "finger", "thumb", "chest", "waist", "hip", "leg", "knee", "ankle", "foot", "toe", "heel",
    "skin", "bone", "muscle", "heart", "lung", "stomach", "liver", "brain", "nerve", "blood",
    "hair", "beard", "voice", "breath",
    // clothing
    "clothes", "shirt", "pants", "trousers", "dress", "skirt", "coat", "jacket", "sweater",
    "hat", "cap", "scarf", "glove", "mitten", "sock", "shoe", "boot", "sandal", "slipper",
    "belt", "button", "pocket", "zipper", "collar", "sleeve", "thread", "needle", "pin", "cloth",
    "fabric", "cotton", "wool", "silk", "leather", "fur", "uniform", "costume", "apron",
    // tools and machines
    "tool", "hammer", "axe", "drill", "screwdriver", "wrench", "pliers", "blade", "screw",
    "bolt", "nut", "ladder", "rope", "chain", "wire", "cable", "pipe", "tube", "hose", "tank",
    "pump", "engine", "motor", "machine", "device", "gadget", "robot", "computer", "screen",
    "keyboard", "switch", "lamp", "bulb", "candle", "lantern", "torch", "clock", "calendar",
    "phone", "camera", "radio", "television", "speaker", "microphone", "battery", "charger",
    "plug", "socket", "magnet", "lens", "coil", "gear", "lever", "pulley", "valve", "filter",
    // furniture and household
    "furniture", "table", "chair", "desk", "bench", "stool", "sofa", "couch", "bed", "mattress",
    "pillow", "blanket", "sheet", "curtain", "carpet", "rug", "mirror", "frame", "picture",
    "painting", "drawing", "photo", "poster", "statue", "shelf", "cabinet", "drawer", "closet",
    "wardrobe", "box", "crate", "basket", "bag", "sack", "bucket", "barrel", "bottle", "jar",
    "tin", "cup", "mug", "glass", "plate", "bowl", "dish", "spoon", "fork", "knife", "pot",
    "pan", "kettle", "tray", "napkin", "towel", "soap", "shampoo", "brush", "comb", "razor",
    "toothbrush", "sponge", "broom", "mop", "vase", "ornament", "souvenir",
    // abstract
    "idea", "dream", "memory", "fear", "joy", "anger", "pride", "shame", "luck", "chance",
    "choice", "reason", "effect", "result", "problem", "solution", "question", "story", "tale",
    "news", "fact", "truth", "secret", "message", "letter", "word", "sentence", "phrase",
    "name", "title", "page", "book", "chapter", "note", "list", "item", "number", "amount",
    "part", "piece", "edge", "side", "middle", "center", "point", "line", "row", "column",
    "angle", "curve", "circle", "square", "triangle", "rectangle", "sphere", "cube", "cone",
    "cylinder", "pyramid", "shape", "size", "color", "pattern", "texture", "surface", "sound",
    "noise", "music", "song", "tune", "rhythm", "beat", "habit", "custom", "tradition", "rule",
    "law", "privilege", "duty", "task", "job", "career", "skill", "talent", "effort", "success",
    "failure", "victory", "defeat", "danger", "safety", "health", "illness", "injury", "wound",
    "cure", "medicine", "dose", "pain", "relief", "comfort", "trouble", "peace", "war", "battle",
    "army", "fleet", "weapon", "bow", "arrow", "spear", "sword", "shield", "armor", "trap",
    "bait", "prey", "target", "purpose", "goal", "score", "prize", "award", "medal", "trophy",
    "race", "contest", "event", "party", "meeting", "visit", "trip", "journey", "tour",
    "vacation", "holiday", "lesson", "course", "exam", "grade", "subject", "science", "math",
    "history", "art", "language", "money", "price", "cost", "bill", "coin", "cash", "wealth",
    "debt", "tax", "wage", "salary", "income", "profit", "loss", "budget", "error", "signal",
    "echo", "sight", "view", "scene", "landscape", "portrait", "detail", "feature", "object",
    "thing", "stuff", "material", "metal", "iron", "steel", "copper", "gold", "aluminum",
    "oxygen", "hydrogen", "carbon", "energy", "power", "speed", "weight", "height", "width",
    "depth", "length", "distance", "area", "volume", "space", "gap", "hole", "dent", "scar",
    "spot", "stain", "stripe", "dot", "sign", "symbol", "code", "key", "handle", "knob",
    "hinge", "lid", "cork", "strap", "loop", "knot", "mile", "meter", "inch", "liter", "gallon",
    "ton", "gram", "kilogram", "degree", "percent", "pair", "couple", "stack", "pile", "heap",
    "bunch", "bundle", "parcel", "package", "gift", "toy", "doll", "kite", "puzzle", "card",
    "dice", "chess", "game", "sport", "ball", "bat", "racket", "net", "piano", "guitar",
    "violin", "cello", "flute", "trumpet", "drum", "horn", "bell", "whistle", "harp", "organ",
    "choir", "orchestra", "opera", "ballet", "concert", "ticket", "seat", "stage", "audience",
    "actor", "scenery", "plot", "stanza", "verse", "poem", "rhyme", "riddle", "joke",
    // transport
    "ship", "boat", "canoe", "ferry", "train", "track", "car", "truck", "bus", "van", "taxi",
    "bicycle", "wheel", "tire", "wing", "tail", "anchor", "paddle", "oar", "rudder", "mast",
    "deck", "cabin", "cargo", "luggage", "suitcase", "wagon", "cart", "sled", "rocket",
    "airplane", "helicopter", "submarine", "tractor", "crane", "bulldozer", "fuel", "gasoline",
    "oil", "coal", "spark", "exhaust", "brake", "pedal", "saddle", "harness", "rein",
};

const char* const kVerbs[] = {
    "go", "goes", "went", "gone", "come", "came", "run", "ran", "walk", "jump", "stand",
    "stood", "sit", "sat", "lie", "lay", "rest", "sleep", "slept", "wake", "woke", "eat", "ate",
    "eaten", "drink", "drank", "cook", "bake", "cut", "chop", "slice", "mix", "stir", "pour",
    "fill", "shut", "lock", "push", "pull", "lift", "drop", "throw", "threw", "thrown", "catch",
    "caught", "hold", "held", "carry", "bring", "brought", "take", "took", "taken", "give",
    "gave", "given", "get", "got", "put", "set", "place", "move", "turn", "spin", "roll",
    "slide", "slid", "fall", "fell", "fallen", "rise", "rose", "risen", "climb", "crawl",
    "swim", "swam", "fly", "flew", "flown", "float", "sink", "sank", "sunk", "drive", "drove",
    "driven", "ride", "rode", "sail", "travel", "arrive", "leave", "stay", "remain", "wait",
    "hurry", "rush", "stop", "start", "begin", "began", "begun", "finish", "continue", "pause",
    "repeat", "try", "tried", "attempt", "fail", "succeed", "win", "won", "lose", "lost",
    "play", "work", "build", "built", "make", "made", "create", "design", "draw", "drew",
    "drawn", "paint", "write", "wrote", "written", "read", "speak", "spoke", "spoken", "talk",
    "say", "said", "tell", "told", "ask", "reply", "call", "shout", "whisper", "sing", "sang",
    "sung", "dance", "laugh", "cry", "cried", "smile", "frown", "look", "see", "saw", "seen",
    "watch", "observe", "notice", "hear", "heard", "listen", "smell", "taste", "touch", "feel",
    "felt", "think", "thought", "know", "knew", "known", "learn", "teach", "taught", "study",
    "remember", "forget", "forgot", "understand", "understood", "believe", "doubt", "hope",
    "wish", "want", "need", "like", "love", "hate", "prefer", "choose", "chose", "chosen",
    "pick", "select", "decide", "prepare", "measure", "count", "compare", "match", "sort",
    "arrange", "organize", "collect", "gather", "spread", "scatter", "cover", "hide", "hid",
    "hidden", "show", "shown", "reveal", "aim", "shoot", "shot", "hit", "miss", "kick",
    "bounce", "break", "broke", "crack", "shatter", "bend", "bent", "fold", "stretch",
    "squeeze", "press", "rub", "scratch", "polish", "wash", "wipe", "sweep", "swept", "scrub",
    "buy", "bought", "sell", "sold", "pay", "paid", "spend", "spent", "save", "earn", "owe",
    "lend", "lent", "borrow", "trade", "send", "sent", "receive", "deliver", "pack", "wrap",
    "tie", "attach", "connect", "join", "split", "merge", "separate", "combine", "include",
    "exclude", "contain", "support", "weigh", "balance", "hang", "hung", "swing", "swung",
    "shake", "shook", "shaken", "tremble", "vibrate", "pound", "tap", "knock", "ring", "rang",
    "rung", "buzz", "hum", "roar", "growl", "bark", "meow", "chirp", "howl", "grow", "grew",
    "grown", "shrink", "shrank", "expand", "contract", "melt", "freeze", "froze", "frozen",
    "boil", "burn", "burnt", "glow", "shine", "shone", "sparkle", "flash", "fade", "darken",
    "brighten", "appear", "disappear", "vanish", "emerge", "enter", "exit", "pass", "cross",
    "follow", "lead", "led", "guide", "chase", "escape", "avoid", "approach", "reach", "grab",
    "seize", "release", "drag", "haul", "tow", "steer", "park", "land", "launch", "explore",
    "discover", "find", "found", "search", "seek", "sought", "examine", "inspect", "verify",
    "confirm", "deny", "accept", "reject", "agree", "argue", "discuss", "debate", "explain",
    "describe", "define", "label", "mark", "print", "copy", "paste", "erase", "delete", "keep",
    "kept", "protect", "guard", "defend", "attack", "fight", "fought", "struggle", "resist",
    "obey", "command", "allow", "permit", "forbid", "prevent", "force", "misdo",
};

const char* const kAdjectives[] = {
    // colors
    "red", "green", "blue", "yellow", "purple", "orange", "teal", "gray", "grey", "brown",
    "pink", "black", "white", "silver", "violet", "crimson", "scarlet", "turquoise", "beige",
    "ivory", "maroon", "navy", "olive", "tan", "amber", "coral", "golden",
    // size and shape
    "big", "small", "large", "little", "long", "short", "tall", "wide", "narrow", "thick",
    "thin", "heavy", "light", "tiny", "huge", "giant", "broad", "massive", "round", "flat",
    "oval", "circular", "angular", "triangular", "rectangular", "spherical", "cubic",
    "straight", "curved", "crooked", "vertical", "horizontal", "diagonal", "parallel",
    "hollow", "dense", "sparse", "slim", "slender", "plump", "compact", "vast",
    // quality
    "good", "bad", "great", "fine", "nice", "poor", "rich", "cheap", "expensive", "safe",
    "dangerous", "common", "rare", "public", "private", "ready", "busy", "free", "tight",
    "loose", "new", "old", "young", "fresh", "stale", "ripe", "raw", "pure", "clean", "dirty",
    "neat", "tidy", "worn", "broken", "complete", "partial", "equal", "different", "similar",
    "opposite", "true", "false", "real", "fake", "main", "central", "final", "next", "present",
    "recent", "current", "former", "latter", "inner", "outer", "upper", "lower", "left",
    "right", "northern", "southern", "eastern", "western", "foreign", "local", "national",
    "global", "royal", "legal", "formal", "casual", "serious", "funny", "boring",
    "interesting", "amazing", "awful", "terrible", "wonderful", "perfect", "odd", "strange",
    "normal", "usual", "typical", "special", "unique", "double", "single", "triple", "whole",
    "half", "major", "minor", "prime", "adequate", "ample", "subtle", "vague", "plain",
    "fancy", "elegant", "crude", "grand", "grim", "quaint", "sleek", "slick", "snug", "sober",
    "sturdy", "robust", "rugged", "frail", "firm", "crisp", "coarse", "blunt", "bare", "blank",
    // temperature and texture
    "hot", "cold", "warm", "cool", "dry", "wet", "damp", "moist", "smooth", "rough", "sharp",
    "dull", "soft", "hard", "slow", "fast", "swift", "brisk", "nimble", "hasty", "prompt",
    // light and sound
    "bright", "dark", "pale", "vivid", "dim", "shiny", "clear", "cloudy", "sunny", "rainy",
    "windy", "snowy", "foggy", "icy", "quiet", "loud", "silent", "noisy",
    // taste
    "sweet", "sour", "bitter", "salty", "bland", "tasty", "mellow",
    // states
    "empty", "full", "open", "closed", "high", "low", "deep", "shallow", "late", "easy",
    "difficult", "simple", "complex", "strong", "weak", "happy", "sad", "angry", "calm",
    "proud", "humble", "brave", "afraid", "certain", "sure", "hungry", "thirsty", "tired",
    "awake", "asleep", "alive", "dead", "healthy", "sick", "ill", "fit", "lazy", "eager",
    "keen", "bold", "shy", "polite", "rude", "kind", "cruel", "honest", "clever", "smart",
    "wise", "foolish", "gentle", "fierce", "wild", "tame", "ancient", "modern", "distant",
    "solid", "liquid", "wooden", "plastic", "rusty", "dusty", "muddy", "sandy", "rocky",
    "grassy", "leafy", "furry", "fuzzy", "striped", "spotted", "faint", "harsh", "lush",
    "meek", "tender", "stiff", "limp", "incorrect",
};

const char* const kAdverbs[] = {
    "again", "almost", "already", "also", "always", "away", "back", "enough", "even", "ever",
    "far", "forever", "forward", "here", "indeed", "instead", "later", "maybe", "meanwhile",
    "never", "now", "often", "once", "twice", "perhaps", "quite", "rather", "seldom",
    "sometimes", "soon", "still", "there", "therefore", "thus", "today", "together", "tomorrow",
    "tonight", "well", "yesterday", "anywhere", "everywhere", "somewhere", "nowhere", "abroad",
    "ahead", "apart", "aside", "downstairs", "upstairs", "halfway", "nearby", "overhead",
    "somehow", "somewhat", "anyway", "else", "quickly", "slowly", "carefully", "quietly",
    "loudly", "brightly", "easily", "hardly", "nearly", "really", "simply", "suddenly",
    "usually", "finally", "exactly", "clearly", "directly", "early", "daily", "weekly",
    "monthly", "yearly", "incorrectly",
};

const char* const kPrepositions[] = {
    "about", "above", "across", "after", "against", "along", "amid", "among", "around", "at",
    "before", "behind", "below", "beneath", "beside", "besides", "between", "beyond", "by",
    "despite", "down", "during", "except", "for", "from", "in", "inside", "into", "near", "of",
    "off", "on", "onto", "outside", "over", "past", "since", "through", "throughout", "to",
    "toward", "towards", "under", "underneath", "until", "up", "upon", "with", "within",
    "without",
};

const char* const kNumerals[] = {
    "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten",
    "eleven", "twelve", "thirteen", "fourteen", "fifteen", "sixteen", "seventeen", "eighteen",
    "nineteen", "twenty", "thirty", "forty", "fifty", "sixty", "seventy", "eighty", "ninety",
    "hundred", "thousand", "million", "billion", "dozen",
};

const char* const kOther[] = {
    "the", "a", "an", "and", "or", "but", "nor", "so", "yet", "if", "then", "than", "that",
    "this", "these", "those", "it", "its", "he", "she", "they", "them", "him", "his", "her",
    "hers", "their", "theirs", "we", "us", "our", "ours", "you", "your", "yours", "i", "me",
    "my", "mine", "who", "whom", "whose", "which", "what", "when", "where", "why", "how",
    "not", "no", "yes", "all", "any", "both", "each", "either", "neither", "few", "fewer",
    "many", "more", "most", "much", "less", "least", "other", "another", "some", "such",
    "only", "own", "same", "too", "very", "can", "cannot", "will", "would", "shall", "should",
    "may", "might", "must", "could", "do", "does", "did", "done", "have", "has", "had",
    "having", "be", "been", "being", "is", "are", "was", "were", "am", "because", "while",
    "although", "though", "whether", "unless", "nobody", "nothing", "everyone", "everything",
    "someone", "something", "anyone", "anything", "none", "itself", "himself", "herself",
    "themselves", "myself", "yourself", "ourselves", "as",
};

} // namespace

PosLexicon::PosLexicon() {
    auto add_all = [this](const char* const* words, std::size_t n, PosClass cls) {
        for (std::size_t i = 0; i < n; ++i) {
            auto [it, inserted] = entries_.emplace(words[i], cls);
            if (!inserted) {
                throw ConfigError("lexicon: duplicate word '" + std::string(words[i]) + "'");
            }
        }
    };
    add_all(kNouns, std::size(kNouns), PosClass::noun);
    add_all(kVerbs, std::size(kVerbs), PosClass::verb);
    add_all(kAdjectives, std::size(kAdjectives), PosClass::adjective);
    add_all(kAdverbs, std::size(kAdverbs), PosClass::adverb);
    add_all(kPrepositions, std::size(kPrepositions), PosClass::preposition);
    add_all(kNumerals, std::size(kNumerals), PosClass::numeral);
    add_all(kOther, std::size(kOther), PosClass::other);
}

PosLexicon::PosLexicon(std::map<std::string, PosClass> entries) : entries_(std::move(entries)) {}

PosClass PosLexicon::tag(const std::string& word) const {
    auto it = entries_.find(word);
    if (it != entries_.end()) return it->second;
    if (!word.empty()) {
        bool digits = true;
        for (char c : word) {
            if (!std::isdigit(static_cast<unsigned char>(c))) digits = false;
        }
        if (digits) return PosClass::numeral;
    }
    auto ends_with = [&word](const char* suffix) {
        std::string s(suffix);
        return word.size() > s.size() && word.compare(word.size() - s.size(), s.size(), s) == 0;
    };
    if (ends_with("ly")) return PosClass::adverb;
    if (ends_with("ing") || ends_with("ed")) return PosClass::verb;
    return PosClass::other;
}

} // namespace alanet
