// Copyright 2026 The Anyword Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Word lists behind the built-in rule parser. Base forms only; plural and
// verb inflections are resolved by the lookup in textgraph.cpp.

#include "lexicon_data.hpp"

namespace anyword::textgraph::lexdata {

const std::string_view kDeterminers =
    "a an the this that these those some any each every another either neither no "
    "his her its their my your our whose which what both all several many few "
    "one two three four five six seven eight nine ten eleven twelve dozen half";

const std::string_view kFunctionWords =
    "of in on at by for with without from to into onto upon over under above below beneath "
    "behind beside besides between among amongst near nearest next through across along "
    "around against toward towards about after before during until while than as like via "
    "per off out up down inside outside within beyond past underneath throughout opposite "
    "and or but nor so yet plus "
    "is are was were be been being am has have had do does did will would can could should "
    "may might must shall "
    "it he she they we you i me him them us itself himself herself themselves "
    "who whom there here where when why how whether if because though although unless since "
    "not very too also just only really quite rather almost more most less least much such "
    "own same then now again ever even still already always never often sometimes partly "
    "mostly fully nearly barely slightly somewhat extremely completely together apart away "
    "first second third fourth fifth last other else";

// Nouns naming a part, garment, material, marking or topping of something
// else. A phrase headed by one of these attaches to the preceding entity.
const std::string_view kAttributeNouns =
    "shirt tshirt t-shirt sweatshirt sweater jumper jacket coat hoodie hat cap helmet scarf "
    "tie bowtie dress skirt pants trousers jeans shorts shoe sneaker boot sock glove mitten "
    "glasses sunglasses goggles mask vest uniform suit jersey apron necklace bracelet earring "
    "belt blouse cardigan overalls pajamas robe gown bikini swimsuit costume outfit clothes "
    "clothing headband bandana turban beanie visor wetsuit raincoat parka tank tunic leggings "
    "stocking sandal slipper heel heels tuxedo blazer kimono sari poncho shawl collar sleeve "
    "hood pocket button zipper lace strap buckle badge patch logo emblem "
    "hair beard mustache moustache head face eye nose mouth ear arm hand finger leg foot "
    "knee shoulder neck back chest belly tail wing fur skin feather beak paw claw hoof horn "
    "mane whisker tongue tooth teeth lip cheek forehead chin eyebrow ponytail braid bangs "
    "leather wool denim cotton silk velvet plaid fleece suede nylon plastic metal wood "
    "stripe spot dot pattern print checker polka camouflage floral "
    "frosting icing sprinkle topping sauce cheese crust filling glaze cream syrup jam "
    "lid cap handle wheel tire tyre roof hood bumper windshield mirror headlight spoke "
    "screen keyboard label sticker tag trim border frame rim edge saddle bridle harness "
    "leash petal leaf stem sail mast deck";

// Common concrete nouns.
const std::string_view kNouns =
    // people
    "man woman boy girl child kid person people guy gal lady gentleman baby toddler infant "
    "teenager teen adult player batter catcher pitcher umpire referee skier snowboarder "
    "surfer skateboarder cyclist biker rider driver pilot officer policeman policewoman "
    "soldier chef cook waiter waitress doctor nurse worker farmer student teacher "
    "mother father mom dad parent son daughter brother sister grandmother grandfather "
    "grandma grandpa bride groom couple family friend crowd group team fan spectator "
    "audience customer passenger pedestrian tourist vendor musician singer dancer "
    "guitarist drummer athlete runner swimmer golfer tennis goalie coach judge king "
    "queen prince princess clown cowboy fisherman sailor firefighter fireman "
    "gentlemen ladies someone somebody anyone everyone individual human figure "
    "blonde brunette "
    // animals
    "dog puppy pup hound canine cat kitten kitty feline bird sparrow songbird fowl pigeon "
    "dove crow raven parrot eagle hawk owl duck duckling goose swan chicken hen rooster "
    "chick turkey seagull gull penguin flamingo pelican horse pony foal cow calf bull ox "
    "sheep lamb goat pig piglet deer elk moose zebra giraffe elephant lion tiger leopard "
    "cheetah bear cub panda monkey ape gorilla chimpanzee kangaroo koala rabbit bunny "
    "hare mouse rat squirrel hamster fox wolf coyote camel donkey mule buffalo bison "
    "rhino rhinoceros hippo hippopotamus crocodile alligator lizard snake turtle tortoise "
    "frog toad fish shark whale dolphin seal octopus crab lobster shrimp butterfly bee "
    "insect spider ant fly mosquito worm snail animal pet creature beast "
    // vehicles
    "car automobile vehicle auto truck lorry van bus minibus taxi cab jeep suv sedan "
    "motorcycle motorbike scooter moped bicycle bike tricycle train locomotive tram "
    "trolley subway airplane plane aircraft jet helicopter airliner boat ship vessel "
    "dinghy canoe kayak yacht sailboat ferry raft cart wagon carriage trailer tractor "
    "ambulance firetruck limousine convertible pickup skateboard snowboard surfboard "
    "ski sled stroller wheelchair "
    // food
    "apple banana orange lemon lime grape strawberry cherry pear peach plum mango "
    "pineapple watermelon melon kiwi coconut berry blueberry raspberry fruit vegetable "
    "carrot broccoli potato tomato onion pepper cucumber lettuce cabbage corn pea bean "
    "mushroom salad sandwich burger hamburger hotdog pizza pasta spaghetti noodle rice "
    "bread bun bagel toast croissant muffin cupcake cake pie cookie biscuit donut "
    "doughnut pastry dessert candy chocolate sweet snack meal dish soup steak chicken "
    "meat sausage bacon egg omelet pancake waffle cereal yogurt butter fries chip "
    "popcorn pretzel taco burrito sushi dumpling icecream cone drink juice coffee tea "
    "milk water wine beer soda smoothie cocktail piece slice chunk bite wedge portion "
    "serving helping scoop loaf bowlful plateful "
    // kitchen / household
    "cup mug beaker tumbler glass bottle jar can pitcher jug kettle teapot pot pan "
    "skillet wok plate dish platter saucer bowl tray fork knife spoon chopstick "
    "spatula ladle whisk napkin towel tablecloth placemat oven stove microwave "
    "refrigerator fridge freezer sink faucet dishwasher toaster blender mixer "
    "cutting board container box crate carton case chest basket bucket pail tub bin "
    "bag backpack purse handbag suitcase luggage briefcase wallet umbrella "
    "table desk chair stool bench couch sofa armchair bed crib cot mattress pillow "
    "cushion bolster pad blanket quilt sheet duvet rug carpet mat runner curtain "
    "blind drape shelf bookshelf bookcase cabinet cupboard drawer dresser wardrobe "
    "closet lamp lantern lampshade torch candle chandelier fan heater radiator clock "
    "vase pot planter flowerpot frame painting poster mirror picture television tv "
    "monitor computer laptop tablet phone cellphone smartphone telephone remote "
    "controller mouse keyboard speaker radio camera printer book notebook magazine "
    "newspaper paper envelope letter card pen pencil marker crayon scissors tape "
    "toy doll teddy puppet block brick ball sphere orb globe balloon kite frisbee "
    "bat racket racquet glove helmet puck stick club net goal hoop basket "
    "toothbrush toothpaste soap shampoo comb brush razor hairdryer toilet bathtub "
    "shower tile door window wall floor ceiling roof stair staircase step railing "
    "fence gate post pole sign signboard billboard banner flag statue sculpture "
    "fountain hydrant meter mailbox trashcan dumpster cone barrier "
    "coin token disk disc medallion ring jewel gem stone rock pebble boulder "
    "shell feather rope chain wire cable pipe hose ladder shovel rake hammer "
    "wrench screwdriver drill saw axe tool tools machine engine motor "
    // places / scenery
    "building house home apartment tower skyscraper church castle palace temple "
    "barn shed cabin hut tent garage bridge road street avenue highway lane path "
    "sidewalk pavement crosswalk intersection parking lot station platform track "
    "rail railway airport runway harbor dock pier port beach shore coast ocean sea "
    "lake river stream pond waterfall wave sand mountain hill valley cliff rock "
    "forest wood woods jungle park garden yard lawn field meadow farm desert island "
    "sky cloud sun moon star rainbow snow ice grass tree trees bush shrub hedge plant "
    "flower blossom bloom rose tulip daisy sunflower lily branch trunk log stump "
    "dirt mud ground earth water puddle fire smoke light shadow city town village "
    "market shop store restaurant cafe kitchen bathroom bedroom livingroom room office "
    "classroom school library hospital museum stadium court pitch arena playground "
    "pool gym zoo aquarium background foreground scene area space view window "
    // sports / misc
    "tennis baseball football soccer basketball volleyball golf hockey rugby cricket "
    "game match race trophy medal ticket menu map computer screen display "
    "object thing item stuff something structure surface container shape "
    "circle square triangle rectangle oval cube cylinder pyramid cone blob "
    "wheel tire engine mirror seat saddle pedal handlebar "
    "doorway entrance exit corner wall";

const std::string_view kAdjectives =
    // colour
    "red orange blue green yellow purple violet pink brown black white gray grey silver gold "
    "golden beige tan teal navy maroon cyan magenta turquoise crimson scarlet ivory "
    "cream khaki olive lavender lilac indigo bronze copper rusty blonde blond "
    "dark light bright pale pastel vivid neon colorful colourful multicolored "
    "transparent clear shiny glossy matte dull "
    // size / shape
    "big small large little tiny huge giant enormous massive tall short long wide "
    "narrow thick thin fat skinny slim chubby round square rectangular circular oval "
    "triangular flat curved straight pointed sharp blunt bent broken whole full empty "
    "half open closed deep shallow high low heavy lightweight miniature "
    // position
    "left right middle center centre central front rear top bottom upper lower inner "
    "outer far near nearby closest furthest farthest leftmost rightmost topmost "
    "distant adjacent "
    // age / quality / state
    "old young new ancient modern vintage fresh ripe rotten raw cooked fried baked "
    "grilled roasted sliced chopped frozen hot cold warm cool wet dry dirty clean messy "
    "neat tidy soft hard smooth rough fluffy furry hairy bald fuzzy wooly woolen wooden "
    "metallic plastic glass leather paper stone brick concrete marble steel iron "
    "striped spotted dotted checkered plaid floral patterned plain printed "
    "happy sad angry smiling laughing crying sleepy tired curious calm playful cute "
    "pretty beautiful handsome ugly funny scary friendly wild tame domestic "
    "busy quiet empty crowded sunny cloudy rainy snowy foggy stormy windy "
    "male female elderly adult baby asian african european american "
    "wooden electric digital wireless automatic manual "
    "fast slow quick lazy strong weak healthy sick "
    "main single double triple other same different similar identical matching "
    "visible hidden partial whole entire only lone solitary extra spare "
    "tasty delicious sweet sour salty spicy bitter juicy crunchy crispy creamy "
    "leafy grassy sandy rocky muddy dusty shady bare naked wrinkled";

// Verbs, base form. -s, -ed and -ing forms are derived during lookup; the
// irregular past forms below are listed explicitly.
const std::string_view kVerbs =
    "hold carry wear ride walk run sit stand lie lay hang eat drink look watch stare "
    "play throw catch kick hit swing bat pitch jump fly drive park pull push lift "
    "climb swim sleep rest read write talk speak smile laugh cry wave point reach "
    "touch hug kiss feed pet chase follow lead cross pass cut slice chop cook bake "
    "serve pour fill wash clean brush comb shave paint draw type use work play "
    "skate ski surf sail row paddle fish hunt graze grow bloom cover surround face "
    "lean rest balance hold grab take give show open close enter leave arrive wait "
    "stop go come move turn bend kneel squat crouch dance sing listen hear see "
    "perch nest fly float sink dive splash spray blow fold tie wrap stack pile "
    "display contain sell buy pay check ring call send share drag tow haul load "
    "unload fix repair build dig plant mow pick";

const std::string_view kIrregularVerbs =
    "held carried wore worn rode ridden ran sat stood lying lay lain hung ate eaten "
    "drank drunk threw thrown caught hit swung flew flown drove driven lifted climbed "
    "swam slept read wrote written spoke spoken took taken gave given showed shown "
    "went gone came moved knelt saw seen heard sang sung dug built bought sold paid "
    "sent told made done got gotten put set stuck";

// Nouns that frame a depiction ("a photo of ..."); dropped when followed by "of".
const std::string_view kFrameNouns = "photo picture image pic snapshot shot closeup view";

// -ing words that are nouns.
const std::string_view kIngNouns =
    "building ceiling painting clothing king ring string wing thing evening morning "
    "sibling pudding stuffing frosting icing topping filling railing awning siding "
    "lightning ceiling bedding dressing sling swing spring";

}  // namespace anyword::textgraph::lexdata
