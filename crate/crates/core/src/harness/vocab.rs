//! Built-in word lists for the synthetic generator. The three lists are
//! pairwise disjoint.

pub const TOPIC: &[&str] = &[
    "pizza", "burger", "noodles", "sushi", "salad", "fries", "dumplings", "curry", "taco",
    "burrito", "sandwich", "wrap", "pasta", "lasagna", "ramen", "pho", "kebab", "falafel",
    "hummus", "pita", "bagel", "croissant", "muffin", "pancake", "waffle", "omelette", "risotto",
    "gnocchi", "calzone", "pepperoni", "mozzarella", "cheddar", "parmesan", "basil", "oregano",
    "garlic", "onion", "pickles", "jalapeno", "avocado", "guacamole", "salsa", "ketchup",
    "mustard", "mayonnaise", "sriracha", "teriyaki", "tempura", "wasabi", "ginger", "tofu",
    "chicken", "beef", "pork", "shrimp", "salmon", "tuna", "bacon", "sausage", "meatball",
    "broccoli", "spinach", "mushroom", "olive", "tomato", "lettuce", "cucumber", "pepper",
    "rice", "quinoa", "couscous", "tortilla", "crust", "topping", "sauce", "dressing", "gravy",
    "dessert", "brownie", "cheesecake", "tiramisu", "gelato", "milkshake", "smoothie",
    "lemonade", "espresso", "latte", "cappuccino", "soda", "kitchen", "chef", "courier",
    "takeout", "menu", "combo", "appetizer", "entree", "portion", "spicy", "crispy",
    "vegetarian", "vegan", "gluten", "delivery", "restaurant",
];

/// Customer-service vocabulary unrelated to food.
pub const IN_DOMAIN: &[&str] = &[
    "account", "password", "login", "username", "email", "subscription", "billing", "invoice",
    "refund", "chargeback", "warranty", "repair", "replacement", "technician", "appointment",
    "router", "modem", "firmware", "license", "activation", "membership", "renewal",
    "cancellation", "statement", "balance", "deposit", "withdrawal", "transfer", "mortgage",
    "insurance", "claim", "policy", "premium", "deductible", "coverage", "passport", "visa",
    "luggage", "boarding", "itinerary", "reservation", "checkin", "upgrade", "loyalty",
    "voucher", "coupon", "ticket", "escalation", "supervisor", "complaint", "feedback",
    "survey", "verification", "identity", "address", "shipping", "tracking", "parcel",
    "warehouse", "return",
];

/// Vocabulary unrelated to the topic and to customer service.
pub const BACKGROUND: &[&str] = &[
    "mountain", "river", "glacier", "volcano", "canyon", "meadow", "forest", "desert",
    "ocean", "island", "comet", "galaxy", "nebula", "planet", "asteroid", "telescope",
    "orbit", "eclipse", "guitar", "violin", "trumpet", "drums", "symphony", "opera", "ballet",
    "sculpture", "painting", "canvas", "poetry", "novel", "chapter", "library", "museum",
    "castle", "cathedral", "bridge", "tower", "harbor", "lighthouse", "village", "football",
    "basketball", "tennis", "marathon", "cycling", "swimming", "climbing", "chess", "puzzle",
    "dinosaur", "fossil", "elephant", "giraffe", "penguin", "dolphin", "eagle", "butterfly",
    "beetle", "squirrel", "rabbit", "tulip", "orchid", "oak", "maple", "cactus", "thunder",
    "rainbow", "blizzard", "hurricane", "tornado", "philosophy", "history", "geometry",
    "algebra", "chemistry", "physics", "biology", "astronomy", "geology", "archaeology",
    "kayak", "sailboat", "submarine", "locomotive", "bicycle", "helicopter", "balloon",
    "parachute", "compass", "lantern", "tent", "campfire", "backpack", "hiking", "skiing",
    "snowboard", "surfing", "fishing", "gardening", "knitting",
];

pub fn owned(words: &[&str]) -> Vec<String> {
    words.iter().map(|w| w.to_string()).collect()
}
